"""Print the efficiency comparison table and the counts behind each row."""

import argparse
import json

from qdsim.analysis import PROTOCOLS, cabello_efficiency, render_table1, table1


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--json", action="store_true", help="emit rows as JSON instead of text")
    args = parser.parse_args()
    if args.json:
        print(json.dumps(table1(), indent=2, sort_keys=True))
        return
    print(render_table1())
    for protocol in PROTOCOLS:
        r = cabello_efficiency(protocol)
        print(f"{protocol:5s} b_s={r.b_s} q_t={r.q_t} b_t={r.b_t} eta={r.b_s}/({r.q_t}+{r.b_t})={100 * r.eta:.1f}%")


if __name__ == "__main__":
    main()
