import sys
from pathlib import Path

# make the shared oracles importable from every test module
sys.path.insert(0, str(Path(__file__).resolve().parent))

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
