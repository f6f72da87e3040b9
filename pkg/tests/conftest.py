from hypothesis import settings

# one CPU and numba first-call compilation make per-example timing meaningless
settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    import acceptance_data

    if not acceptance_data.RESULTS:
        return
    terminalreporter.section("acceptance")
    for n in range(1, 13):
        if n not in acceptance_data.RESULTS:
            terminalreporter.write_line(f"[{n:2d}] ----  not run")
            continue
        title, ok, detail = acceptance_data.RESULTS[n]
        terminalreporter.write_line(f"[{n:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
