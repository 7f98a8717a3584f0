from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    # acceptance tests record one line per criterion; show them even when
    # stdout capture swallowed the in-test prints
    import sys
    test_acceptance = sys.modules.get("tests.test_acceptance") or sys.modules.get("test_acceptance")
    lines = getattr(test_acceptance, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
