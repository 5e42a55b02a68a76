"""Adds a per-criterion PASS/FAIL block to the terminal summary."""


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", None) != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" not in props:
                continue
            lines.append((props["criterion"], "PASS" if outcome == "passed" else "FAIL",
                          props.get("detail", "")))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, verdict, detail in sorted((int(c.split(".")[0]), c, v, d) for c, v, d in lines):
        terminalreporter.write_line(f"{verdict}  {title}  {detail}".rstrip())
