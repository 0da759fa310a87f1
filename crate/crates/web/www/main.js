// Built with: wasm-pack build crates/web --target web --out-dir www/pkg
import init, { scenario_info, check_ce, bound_ladder } from "./pkg/ctxlab_web.js";

const $ = (id) => document.getElementById(id);

function show(id, json) {
  const v = JSON.parse(json);
  $(id).textContent = v.error ? "error: " + v.error : JSON.stringify(v, null, 2);
}

function num(x) {
  return x.exact.includes("/") ? `${x.exact} (${x.decimal})` : x.exact;
}

await init();

$("info").onclick = () => show("info-out", scenario_info($("scenario").value));

$("check").onclick = () => {
  const v = JSON.parse(check_ce($("scenario").value, $("prob").value, Number($("copies").value), $("mode").value));
  $("check-out").textContent = v.error
    ? "error: " + v.error
    : `${v.holds ? "holds" : "fails"}; largest clique sum ${num(v.worst_sum)}\n${v.worst_clique.join("\n")}`;
};

$("ladder").onclick = () => {
  const v = JSON.parse(bound_ladder($("scenario").value, $("objective").value, $("mode").value));
  $("ladder-out").textContent = v.error
    ? "error: " + v.error
    : `${v.objective}: nc ${num(v.nc)} <= ce1 ${num(v.ce1)} <= consistent ${num(v.consistent)}`;
};
