"""Verify the DuckDB run archive."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from csl_sim.services.run_archive import RunArchive


def check_archive(db_path: Path = RunArchive.DB_PATH) -> bool:
    """Check archive setup and display recent runs."""
    print("=" * 60)
    print("Run Archive Check")
    print("=" * 60)

    try:
        RunArchive.init_database(db_path)
        print("✓ Archive initialized")
        print(f"  Location: {db_path.absolute()}")
        size_mb = db_path.stat().st_size / (1024 * 1024)
        print(f"  Size: {size_mb:.2f} MB")
    except Exception as e:
        print(f"✗ Archive initialization failed: {e}")
        return False

    try:
        conn = RunArchive.get_connection(db_path)
        tables = conn.execute("SHOW TABLES").fetchall()
        print(f"\n✓ Tables found: {len(tables)}")
        for (table_name,) in tables:
            count = conn.execute(f"SELECT COUNT(*) FROM {table_name}").fetchone()[0]
            print(f"  - {table_name}: {count} rows")
        conn.close()
    except Exception as e:
        print(f"✗ Table check failed: {e}")
        return False

    try:
        runs = RunArchive.list_runs(db_path=db_path)
        print(f"\n✓ Runs: {runs.height}")
        for row in runs.tail(10).iter_rows(named=True):
            status = "passed" if row["passed"] else "FAILED"
            print(f"  - {row['run_id']}: {status}, max rel_err {row['max_rel_err']:.3e}")
        failed = RunArchive.failed_checks(db_path)
        if failed:
            print(f"\n✗ Failed checks: {len(failed)}")
            for item in failed:
                print(f"  - {item['run_id']}: {item['check']}")
    except Exception as e:
        print(f"✗ Run listing failed: {e}")
        return False

    print("\n" + "=" * 60)
    print("Archive check complete!")
    print("=" * 60)
    return True


if __name__ == "__main__":
    path = Path(sys.argv[1]) if len(sys.argv) > 1 else RunArchive.DB_PATH
    success = check_archive(path)
    sys.exit(0 if success else 1)
