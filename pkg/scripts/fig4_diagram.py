"""Diagrams of the five-vertex example graph (A-B:1, C-D:2, B-C:4, C-E:6, E-B:7)."""

import argparse
import json

from visnet import persistence, svgplot
from visnet.corrnet import VisualNetwork


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--svg", help="write the diagram plot here")
    args = ap.parse_args()

    net = VisualNetwork(tuple("ABCDE"),
                        ((0, 1, 1.0), (2, 3, 2.0), (1, 2, 4.0), (2, 4, 6.0), (1, 4, 7.0)))
    fg = persistence.build_filtration(net)
    dg = persistence.compute_diagrams(fg)
    print("vertex values:", dict(zip(fg.names, fg.vertex_values)))
    print("with diagonal:", json.dumps(dg.to_json(keep_diagonal=True)))
    print("filtered:     ", json.dumps(dg.to_json()))
    if args.svg:
        shown = persistence.PersistenceDiagram.from_json(dg.to_json())
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(svgplot.diagram_svg(shown, "five-vertex example"))


if __name__ == "__main__":
    main()
