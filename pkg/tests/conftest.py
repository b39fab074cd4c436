import sys
from pathlib import Path

# make the shared test helpers (synth_digits) importable
sys.path.insert(0, str(Path(__file__).parent))
