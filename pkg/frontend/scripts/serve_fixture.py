"""Start a simulator-backed session service for UI contract tests.

Trains a quick selector (naive-Bayes-only grid on a small synthetic cohort)
into a temp directory, then serves the session API on the given port.
Prints "READY <port>" on stdout once the server is listening.
"""

import sys
import tempfile
import threading
from pathlib import Path

import uvicorn

from traitwave.classical import ModelSpec, select_per_trait, train_grid
from traitwave.dataset import split_80_20
from traitwave.service import create_app
from traitwave.simulator import EffectConfig, cohort_records, sample_cohort


def main() -> None:
    port = int(sys.argv[1]) if len(sys.argv) > 1 else 8765
    profiles = sample_cohort(14, EffectConfig(scale=1.0), seed=0)
    records = cohort_records(profiles, duration_s=20, seed=0)
    split = split_80_20(records, seed=0)
    models = train_grid(records, split, seed=0, specs=[ModelSpec("gaussian_nb", ())])
    selector = select_per_trait(models)
    data_dir = Path(tempfile.mkdtemp(prefix="traitwave-ui-"))
    app = create_app(selector, data_dir)

    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    server = uvicorn.Server(config)

    def announce():
        import time

        while not server.started:
            time.sleep(0.05)
        print(f"READY {port}", flush=True)

    threading.Thread(target=announce, daemon=True).start()
    server.run()


if __name__ == "__main__":
    main()
