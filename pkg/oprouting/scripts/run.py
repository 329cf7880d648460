# -----------------------------------------------------------------------------
# MIT License
#
# Copyright (c) 2024 OpRouting Team
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
# -----------------------------------------------------------------------------

"""``oprouting`` command line: cone lookups, simulations, capacity, verification suites and sweeps."""
import argparse
import sys
from typing import Optional, Sequence

from oprouting.executor import execute
from oprouting.network_generator import builtin_names
from oprouting.utils.log_config import setup_logging


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=str, default=None, help="YAML experiment configuration.")
    parser.add_argument("--network", type=str, default=None, choices=builtin_names(),
                        help="Builtin network; overrides the configured one. Default: example-four-node.")
    parser.add_argument("--n_relays", type=int, default=None, help="Relays of a chain, line or random network.")
    parser.add_argument("--network_seed", type=int, default=None, help="Seed of the random network.")
    parser.add_argument("--K", type=float, default=None, help="Geometric weight parameter (default 3).")
    parser.add_argument("--verbose", type=int, default=0, help="Progress bars when positive.")
    parser.add_argument("--log_config", type=str, default="oprouting/logging.conf",
                        help="logging.config file of the run.")


def _arrivals(parser: argparse.ArgumentParser):
    parser.add_argument("--lambda", dest="lam", type=str, default=None,
                        help="Arrival rates of relays 1..N, e.g. '0.1,0.2,0.1'.")
    parser.add_argument("--arrival_kind", type=str, default=None, choices=["bernoulli", "batch-uniform"])
    parser.add_argument("--a_max", type=int, default=None, help="Largest batch of batch-uniform arrivals.")


def _simulation(parser: argparse.ArgumentParser):
    parser.add_argument("--horizon", type=int, default=None, help="Slots per run (default 10000).")
    parser.add_argument("--warmup", type=int, default=None, help="Slots excluded from statistics (default 10%%).")
    parser.add_argument("--seed", type=int, default=None, help="Root seed of the random streams.")
    parser.add_argument("--tie", type=str, default=None, choices=["lowest-index", "random"],
                        help="Tie breaking inside the lowest-rank class.")
    parser.add_argument("--out", type=str, default=None, help="Output directory (default Log/<timestamp>).")


def get_default_arguments(description: Optional[Sequence[str]] = None):
    parser = argparse.ArgumentParser(prog="oprouting", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("resolve", help="Cone ordering of a backlog vector.")
    _common(p)
    p.add_argument("--q", type=str, required=True, help="Backlogs of relays 1..N, e.g. '1,3'.")
    p.add_argument("--path_connected", action="store_true", help="Restrict to path-connected orderings.")

    p = sub.add_parser("simulate", help="One simulation run.")
    _common(p)
    _arrivals(p)
    _simulation(p)
    p.add_argument("--policy", type=str, default=None,
                   help="backpressure, orcd, fpolicy, pc-fpolicy, etx or static-priority:<ordering-json>.")
    p.add_argument("--trace-out", "--trace_out", dest="trace_out", type=str, default=None,
                   help="Write the long-form trace CSV to this path.")

    p = sub.add_parser("capacity", help="Capacity program and boundary scaling.")
    _common(p)
    _arrivals(p)
    p.add_argument("--direction", type=str, default=None, help="Direction of the boundary scaling.")
    p.add_argument("--solver", type=str, default="simplex", choices=["simplex", "scipy"])
    p.add_argument("--witness", action="store_true", help="Include the randomized routing witness.")

    p = sub.add_parser("verify", help="Property suites.")
    _common(p)
    p.add_argument("--suites", type=str, nargs="+", default=None, help="Suite names (default: all but the "
                                                                         "long-running stability and delay).")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k_values", type=str, default=None, help="Geometric parameters, e.g. '2,3,10'.")
    p.add_argument("--max_relays", type=int, default=None, help="Largest oracle network size.")
    p.add_argument("--orcd_K", type=float, default=None, help="Weight parameter of the ORCD refinement suite.")
    p.add_argument("--broken-weight", "--broken_weight", dest="broken_weight", action="store_true",
                   help="Negative control: distort f(., n >= 2) in the cone-uniqueness suite.")
    p.add_argument("--report", type=str, default=None, help="Write the JSON report to this path.")

    p = sub.add_parser("sweep", help="Policy x scale x seed grid of simulations.")
    _common(p)
    _arrivals(p)
    _simulation(p)
    p.add_argument("--policies", type=str, nargs="+", default=None)
    p.add_argument("--scales", type=str, default=None, help="Scalings of the direction, e.g. '0.2,0.5,0.8'.")
    p.add_argument("--seeds", type=str, default=None, help="Seeds, e.g. '0,1,2'.")
    p.add_argument("--direction", type=str, default=None)
    p.add_argument("--relative", action="store_true", help="Scales are fractions of the boundary scaling.")
    p.add_argument("--workers", type=int, default=None)

    if description is None:
        return parser.parse_args()
    return parser.parse_args(description)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = get_default_arguments(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    setup_logging(args.log_config)
    return execute(args)


if __name__ == '__main__':
    sys.exit(main())
