"""Standalone HTML wrapper around a Sankey document.

The document JSON is embedded verbatim in a typed script tag (machine
recoverable), and the vendored renderer asset is inlined so the file opens
offline in any browser.
"""

from __future__ import annotations

import json
from importlib import resources

from lantree.viz.sankey import SankeyDoc

DATA_ELEMENT_ID = "sankey-data"

_TEMPLATE = """<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>{title}</title>
<style>
body {{ font-family: monospace; margin: 16px; background: #fcfcfc; }}
#sankey-chart {{ border: 1px solid #ddd; background: #fff; }}
</style>
</head>
<body>
<h3>{title}</h3>
<div id="sankey-chart"></div>
<script type="application/json" id="{data_id}">{doc_json}</script>
<script>{renderer}</script>
</body>
</html>
"""


def _renderer_source() -> str:
    return resources.files("lantree.viz").joinpath("assets/sankey.js").read_text(encoding="utf-8")


def render_html(doc: SankeyDoc, title: str = "lantree sankey") -> str:
    doc_json = json.dumps(doc.to_json_dict(), ensure_ascii=False)
    # "</" would close the script tag early inside inline JSON.
    doc_json = doc_json.replace("</", "<\\/")
    return _TEMPLATE.format(
        title=title,
        data_id=DATA_ELEMENT_ID,
        doc_json=doc_json,
        renderer=_renderer_source(),
    )


def extract_doc_json(html: str) -> dict:
    """Recover the embedded document from rendered HTML (tests, tooling)."""
    marker = f'id="{DATA_ELEMENT_ID}">'
    start = html.index(marker) + len(marker)
    end = html.index("</script>", start)
    return json.loads(html[start:end].replace("<\\/", "</"))
