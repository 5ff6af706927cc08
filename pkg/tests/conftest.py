"""Shared pytest configuration: acceptance criteria result lines."""

ACCEPTANCE_FILE = "test_acceptance.py"

CRITERIA = {
    "test_chunker_oracle": "chunker oracle: 1000 random shapes + fixed cases, <5s",
    "test_resolver_oracle": "resolver oracle: 10k-record store vs linear scan, 500 queries, <30s",
    "test_eligibility_and_scoring": "eligibility rule and log-score values to 1e-15",
    "test_gradient_check": "analytic gradients vs central differences, rel err <1e-4, <60s",
    "test_overfitting_oracle": "overfit 32 synthetic docs to train MAE <0.05, <2min",
    "test_generalization_sanity": "held-out R^2 >= 0.8 on noisy synthetic target, <10min",
    "test_metric_identities": "metric identities: perfect, mean, and hand-computed cases",
    "test_interchange_round_trip": "container round-trip bit-exact; truncation rejected with offset",
    "test_ingestion_scaling": "1 GB dump ingests under 512 MB peak RSS and 10 min",
    "test_training_determinism": "identical seeds give byte-identical checkpoints and histories",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for status, marker in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            if ACCEPTANCE_FILE not in report.nodeid:
                continue
            name = report.nodeid.split("::")[-1]
            label = CRITERIA.get(name, name)
            lines.append((name, f"ACCEPTANCE {marker}: {label}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        order = {name: i for i, name in enumerate(CRITERIA)}
        for _, line in sorted(lines, key=lambda pair: order.get(pair[0], 99)):
            terminalreporter.write_line(line)
