/* Minimal dependency-free Sankey renderer.
 *
 * Reads the JSON document from <script id="sankey-data"> and draws an SVG:
 * one column per depth, node heights proportional to flow-through, links as
 * cubic ribbons whose width encodes the probability. Within a column, nodes
 * keep document order, which is descending probability per source.
 */
(function () {
  "use strict";

  function render() {
    var raw = document.getElementById("sankey-data");
    var host = document.getElementById("sankey-chart");
    if (!raw || !host) return;
    var doc = JSON.parse(raw.textContent);
    var W = 1200, H = 640, PAD = 24, NODE_W = 14, GAP = 8;

    var svgNS = "http://www.w3.org/2000/svg";
    var svg = document.createElementNS(svgNS, "svg");
    svg.setAttribute("viewBox", "0 0 " + W + " " + H);
    svg.setAttribute("width", "100%");
    host.appendChild(svg);
    if (!doc.nodes.length) return;

    var depthOf = {}, flowOf = {};
    doc.nodes.forEach(function (n) { depthOf[n.id] = 0; flowOf[n.id] = 0; });
    doc.links.forEach(function (l) {
      depthOf[l.target] = l.depth;
      flowOf[l.target] += l.value;
      flowOf[l.source] = flowOf[l.source] || 0;
    });
    // Root flow = total outgoing, so widths line up.
    doc.nodes.forEach(function (n) {
      var out = doc.links.filter(function (l) { return l.source === n.id; })
        .reduce(function (s, l) { return s + l.value; }, 0);
      flowOf[n.id] = Math.max(flowOf[n.id], out, 1e-4);
    });

    var maxDepth = 0;
    doc.nodes.forEach(function (n) { maxDepth = Math.max(maxDepth, depthOf[n.id]); });
    var colW = (W - 2 * PAD - NODE_W) / Math.max(maxDepth, 1);

    var columns = [];
    for (var d = 0; d <= maxDepth; d++) columns.push([]);
    doc.nodes.forEach(function (n) { columns[depthOf[n.id]].push(n); });

    var unit = 0;
    columns.forEach(function (col) {
      var total = col.reduce(function (s, n) { return s + flowOf[n.id]; }, 0);
      var usable = H - 2 * PAD - GAP * Math.max(col.length - 1, 0);
      if (total > 0) unit = unit === 0 ? usable / total : Math.min(unit, usable / total);
    });
    if (unit === 0) unit = 1;

    var pos = {};
    columns.forEach(function (col, d) {
      var y = PAD;
      col.forEach(function (n) {
        var h = Math.max(flowOf[n.id] * unit, 2);
        pos[n.id] = { x: PAD + d * colW, y: y, h: h, outOff: 0, inOff: 0 };
        y += h + GAP;
      });
    });

    doc.links.forEach(function (l) {
      var s = pos[l.source], t = pos[l.target];
      if (!s || !t) return;
      var w = Math.max(l.value * unit, 1);
      var x0 = s.x + NODE_W, y0 = s.y + s.outOff + w / 2;
      var x1 = t.x, y1 = t.y + t.inOff + w / 2;
      s.outOff += w; t.inOff += w;
      var mid = (x0 + x1) / 2;
      var path = document.createElementNS(svgNS, "path");
      path.setAttribute("d", "M" + x0 + "," + y0 + " C" + mid + "," + y0 + " " + mid + "," + y1 + " " + x1 + "," + y1);
      path.setAttribute("stroke", nodeColor(l.source));
      path.setAttribute("stroke-width", w);
      path.setAttribute("stroke-opacity", "0.35");
      path.setAttribute("fill", "none");
      var title = document.createElementNS(svgNS, "title");
      title.textContent = label(l.source) + " → " + label(l.target) + "  p=" + l.value.toFixed(4);
      path.appendChild(title);
      svg.appendChild(path);
    });

    doc.nodes.forEach(function (n) {
      var p = pos[n.id];
      var rect = document.createElementNS(svgNS, "rect");
      rect.setAttribute("x", p.x); rect.setAttribute("y", p.y);
      rect.setAttribute("width", NODE_W); rect.setAttribute("height", p.h);
      rect.setAttribute("fill", n.color);
      svg.appendChild(rect);
      var text = document.createElementNS(svgNS, "text");
      text.setAttribute("x", p.x + NODE_W + 4);
      text.setAttribute("y", p.y + Math.min(p.h, 14));
      text.setAttribute("font-size", "11");
      text.setAttribute("font-family", "monospace");
      text.textContent = n.label;
      svg.appendChild(text);
    });

    function nodeColor(id) {
      for (var i = 0; i < doc.nodes.length; i++) if (doc.nodes[i].id === id) return doc.nodes[i].color;
      return "#888";
    }
    function label(id) {
      for (var i = 0; i < doc.nodes.length; i++) if (doc.nodes[i].id === id) return doc.nodes[i].label;
      return "?";
    }
  }

  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", render);
  } else {
    render();
  }
})();
