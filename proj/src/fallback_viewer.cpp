namespace pano {

// Served when no built viewer is supplied at export time: a flat
// equirectangular preview with one button per outgoing edge.
extern const char* const kFallbackViewerHtml;
const char* const kFallbackViewerHtml = R"html(<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>panoworld</title>
<style>
  body { margin: 0; background: #111; color: #ddd; font: 14px sans-serif; }
  #pano { display: block; width: 100%; }
  #bar { padding: 8px; }
  button { margin-right: 6px; }
  .error { color: #f66; }
</style>
</head>
<body>
<img id="pano" alt="">
<div id="bar"></div>
<script>
"use strict";
let world = null;

function outgoing(id) {
  return world.edges.filter(e => e.from === id);
}

function show(id) {
  const scene = world.scenes.find(s => s.id === id);
  const bar = document.getElementById("bar");
  bar.textContent = "";
  if (!scene) {
    bar.innerHTML = '<span class="error">unknown scene</span>';
    return;
  }
  const img = document.getElementById("pano");
  img.onerror = () => { bar.innerHTML = '<span class="error">missing image for scene ' + id + '</span>'; };
  img.src = scene.image;
  location.hash = encodeURIComponent(id);
  const label = document.createElement("span");
  label.textContent = "scene " + id + "  ";
  bar.appendChild(label);
  for (const e of outgoing(id)) {
    const b = document.createElement("button");
    b.textContent = "go " + e.displacement.direction + "° → " + e.to;
    b.onclick = () => show(e.to);
    bar.appendChild(b);
  }
}

fetch("world.json").then(r => r.json()).then(w => {
  world = w;
  const wanted = decodeURIComponent(location.hash.slice(1));
  show(world.scenes.some(s => s.id === wanted) ? wanted : world.scenes[0].id);
});
</script>
</body>
</html>
)html";

}  // namespace pano
