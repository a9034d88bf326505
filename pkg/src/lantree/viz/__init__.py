from lantree.viz.html import render_html
from lantree.viz.sankey import SankeyDoc, color_for_label, sankey_to_tree, tree_to_sankey

__all__ = ["SankeyDoc", "color_for_label", "render_html", "sankey_to_tree", "tree_to_sankey"]
