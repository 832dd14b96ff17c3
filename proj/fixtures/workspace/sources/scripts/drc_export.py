import sys

from boardsim import open_design, load_rules, run_drc, export_report, summarize_violations


def check(path, rules_path, report_path):
    design = open_design(path)
    rules = load_rules(rules_path)
    violations = run_drc(design, rules)
    export_report(violations, report_path, fmt="html")
    return summarize_violations(violations)


if __name__ == "__main__":
    summary = check(sys.argv[1], sys.argv[2], "drc.html")
    for rule, count in sorted(summary.items()):
        print(rule, count)
