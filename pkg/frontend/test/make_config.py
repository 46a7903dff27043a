"""Print the bench config used by the UI session test: the storage-demo
bench with every metronome initially stopped except the 1 Hz pair, exactly
as the preset builds it (the session hand-starts the injector itself)."""
import json
import sys

from metrolatch.assembly import AssemblyConfig, PRESETS
from metrolatch.config import config_to_dict

cfg = PRESETS["paper_latch"](AssemblyConfig(preset="paper_latch"))
out = config_to_dict(cfg)
out.pop("preset", None)
json.dump(out, sys.stdout, indent=1)
print()
