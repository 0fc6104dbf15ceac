#!/usr/bin/env python3

"""
Loads a steady state (``model.txt``) and its action chart (``chart.h5``), as written by the
``steady-state`` and ``action-angle`` tasks, and prints the frequency range per momentum slice.
"""

from __future__ import annotations

import sys
import argparse

import numpy

import _setup_gravdamp_env  # noqa
from gravdamp.action_angle import ActionChart
from gravdamp.steady_state import PolytropeModel


def main(argv):
    """
    Main entry.
    """
    parser = argparse.ArgumentParser(description="Summary of an action chart")
    parser.add_argument("model_file", type=str)
    parser.add_argument("chart_file", type=str)
    parser.add_argument("--every", type=int, default=1, help="print every n-th momentum slice")
    args = parser.parse_args(argv[1:])
    model = PolytropeModel.load(args.model_file)
    chart = ActionChart.load(args.chart_file, model)
    c0, decreasing = chart.monotonicity()
    print(chart)
    print("omega in [%.12g, %.12g], lambda_min %.12g" % (chart.omega_min, chart.omega_max, chart.lambda_min))
    print("min |d_E omega| %.6e, strictly decreasing: %s" % (c0, decreasing))
    print("%12s %14s %14s %14s %14s" % ("L", "e_min", "omega(e_min)", "omega(E0)", "T(E0)"))
    for j in range(0, len(chart.L), max(args.every, 1)):
        print(
            "%12.6g %14.8g %14.8g %14.8g %14.8g"
            % (chart.L[j], chart.e_min[j], chart.omega[0, j], chart.omega[-1, j], chart.T[-1, j])
        )
    print("nodes: %i, sum of weights %.12g" % (chart.num_nodes, float(numpy.sum(chart.weights))))


if __name__ == "__main__":
    import better_exchook

    better_exchook.install()
    main(sys.argv)
