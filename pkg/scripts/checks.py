"""
Shared runner for the scripts/test_*.py check scripts.

Each script keeps plain test_* functions (collected by pytest as well) and
calls run_module(globals(), title) from its __main__ block.
"""
import sys
import time
import traceback
from typing import Callable, Iterable


def run_checks(title: str, checks: Iterable[Callable[[], None]]) -> bool:
    print("=" * 60)
    print(title)
    print("=" * 60)
    print()

    results = {}
    for check in checks:
        name = check.__name__
        start = time.perf_counter()
        try:
            check()
            results[name] = True
            print(f"   ✅ {name} ({time.perf_counter() - start:.2f}s)")
        except AssertionError as e:
            results[name] = False
            print(f"   ❌ {name}: {e}")
        except Exception as e:
            results[name] = False
            print(f"   ❌ {name}: {type(e).__name__}: {e}")
            traceback.print_exc()

    print()
    print("=" * 60)
    passed = sum(results.values())
    print(f"{passed}/{len(results)} checks passed")
    if passed == len(results):
        print("🎉 All checks passed!")
    else:
        print("⚠️  Some checks failed. See the messages above.")
    print("=" * 60)
    return passed == len(results)


def run_module(namespace: dict, title: str):
    """Run every test_* function of a module namespace, in definition order, and exit."""
    checks = [fn for name, fn in namespace.items() if name.startswith("test_") and callable(fn)]
    sys.exit(0 if run_checks(title, checks) else 1)
