"""
Quick verification script to check if the setup is correct.
Run this to verify your environment is configured properly.
"""
import os
import sys
from pathlib import Path

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))


def check_env_file():
    """The .env file is optional; report which overrides it sets."""
    env_path = Path(__file__).parent.parent / ".env"

    if not env_path.exists():
        print("✅ No .env file (defaults in config.py apply)")
        return True

    from dotenv import load_dotenv
    load_dotenv(env_path)

    overrides = [name for name in ("SADDLE_RUNS_DIR", "SADDLE_PROGRESS", "SADDLE_ORACLE_CACHE") if os.getenv(name)]
    if overrides:
        print(f"✅ .env overrides: {', '.join(overrides)}")
    else:
        print("⚠️  .env found but sets none of SADDLE_RUNS_DIR, SADDLE_PROGRESS, SADDLE_ORACLE_CACHE")
    return True


def check_dependencies():
    """Check if required packages are installed."""
    required = {
        "numpy": "numpy",
        "scipy": "scipy",
        "pandas": "pandas",
        "networkx": "networkx",
        "matplotlib": "matplotlib",
        "pydantic": "pydantic",
        "tqdm": "tqdm",
        "dotenv": "python-dotenv",
        "streamlit": "streamlit",
    }

    missing = []
    for module, package in required.items():
        try:
            __import__(module)
        except ImportError:
            missing.append(package)

    if missing:
        print(f"❌ Missing dependencies: {', '.join(missing)}")
        print("   Run: pip install -r requirements.txt")
        return False

    import pydantic
    if int(pydantic.VERSION.split(".")[0]) < 2:
        print(f"❌ pydantic {pydantic.VERSION} found, version 2 or later is required")
        return False

    print("✅ All dependencies installed")
    return True


def check_directories():
    """Check if required directories exist."""
    from config import SCENARIO_DIR, RUNS_DIR, ORACLE_CACHE_DIR

    dirs = {
        "Scenarios": SCENARIO_DIR,
        "Runs": RUNS_DIR,
        "Oracle cache": ORACLE_CACHE_DIR,
    }

    all_exist = True
    for name, path in dirs.items():
        if path.exists():
            print(f"✅ {name} directory: {path}")
        else:
            print(f"❌ {name} directory missing: {path}")
            all_exist = False

    return all_exist


def check_scenarios():
    """Every shipped scenario must pass validation."""
    from config import SCENARIO_DIR
    from scripts.errors import ScenarioError, ScenarioValidationError
    from scripts.scenario import load_scenario

    paths = sorted(SCENARIO_DIR.glob("*.json"))
    if not paths:
        print(f"❌ No scenario files found in {SCENARIO_DIR}")
        return False

    ok = True
    for path in paths:
        try:
            spec = load_scenario(path)
            print(f"✅ {path.name}: {spec.N} agent(s), q = {spec.q}, {spec.steps} steps")
        except (ScenarioError, ScenarioValidationError) as e:
            print(f"❌ {path.name}: {e}")
            ok = False
    return ok


def check_oracle_cache():
    """Report cached clairvoyant solutions (informational only)."""
    from config import ORACLE_CACHE_DIR

    cached = list(ORACLE_CACHE_DIR.glob("*.json"))
    if cached:
        print(f"✅ {len(cached)} cached oracle solution(s) in {ORACLE_CACHE_DIR}")
    else:
        print("⚠️  Oracle cache is empty; the first run of the benchmark solves it (about a minute)")
    return True


def main():
    print("=" * 50)
    print("Saddle-Point Controller Lab - Setup Verification")
    print("=" * 50)
    print()

    results = []

    print("1. Checking environment configuration...")
    results.append(check_env_file())
    print()

    print("2. Checking dependencies...")
    results.append(check_dependencies())
    print()

    print("3. Checking directory structure...")
    results.append(check_directories())
    print()

    if results[1]:
        print("4. Validating shipped scenarios...")
        results.append(check_scenarios())
        print()

    print("5. Checking oracle cache...")
    check_oracle_cache()  # Informational, not blocking
    print()

    print("=" * 50)
    if all(results):
        print("✅ Setup looks good! You're ready to go.")
        print()
        print("Next steps:")
        print("  1. Run: python scripts/run_experiment.py validate")
        print("  2. Run: python scripts/run_experiment.py compare")
        print("  3. Run: streamlit run app/app.py")
    else:
        print("⚠️  Some issues found. Please fix them before proceeding.")
    print("=" * 50)
    return all(results)


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
