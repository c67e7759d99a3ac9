"""Reads an LP file with HiGHS, solves it and writes HiGHS's own rendering.

Usage: lp_reference.py IN.lp OUT.lp
Prints one line: cols=<n> rows=<m> status=<status> objective=<value>
"""
import sys

import highspy


def main() -> int:
    src, dst = sys.argv[1], sys.argv[2]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if h.readModel(src) != highspy.HighsStatus.kOk:
        print("status=read-error")
        return 1
    lp = h.getLp()
    cols, rows = lp.num_col_, lp.num_row_
    h.writeModel(dst)
    h.run()
    status = h.modelStatusToString(h.getModelStatus())
    obj = h.getInfo().objective_function_value
    print(f"cols={cols} rows={rows} status={status} objective={obj!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
