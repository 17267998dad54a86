import sys

import pytest

# Small synthetic settings so every subcommand finishes in about a second.
SMALL = ["--synthetic", "--n-rows", "600", "--n-noise", "3", "--n-pairs", "1",
         "--positive-fraction", "0.7", "--data-seed", "2"]

# One invocation per subcommand; each writes JSON reports into --out.
CLI_CASES = {
    "synth": ["synth", "--n-rows", "300", "--n-pairs", "1", "--name", "s"],
    "profile": ["profile", *SMALL],
    "train": ["train", *SMALL, "--repeats", "2", "--rules", "--epochs", "2"],
    "explain": ["explain", *SMALL, "--model", "mlp", "--method", "SHAP_GLOBAL",
                "--shap-instances", "8", "--epochs", "2"],
    "cross-explain": ["cross-explain", *SMALL, "--model", "ridge", "--method", "RIDGE_FC",
                      "--repeats", "2"],
    "sweep": ["sweep", *SMALL, "--model", "mlp", "--method", "PI", "--pi-repeats", "2",
              "--epochs", "2", "--seeds", "1,2", "--vary", "lr=0.01"],
    "probe-mcc": ["probe-mcc", "--max-small", "5", "--tn", "1000"],
    "toy-demo": ["toy-demo", "--resolution", "51"],
}


@pytest.fixture(params=sorted(CLI_CASES))
def cli_case(request):
    return request.param, CLI_CASES[request.param]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1].rstrip("."))):
        terminalreporter.write_line(line)
