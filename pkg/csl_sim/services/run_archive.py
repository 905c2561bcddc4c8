"""Archive of experiment run reports using DuckDB."""
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

import duckdb
import polars as pl

from .experiments import RunReport

logger = logging.getLogger(__name__)


class RunArchive:
    """Store and query RunReports in a DuckDB file."""

    DB_PATH = Path("data/runs.duckdb")

    @classmethod
    def _get_connection(cls, db_path: Optional[Path] = None):
        """Get database connection."""
        path = Path(db_path) if db_path is not None else cls.DB_PATH
        path.parent.mkdir(parents=True, exist_ok=True)
        return duckdb.connect(str(path))

    @classmethod
    def get_connection(cls, db_path: Optional[Path] = None):
        """Public method to get connection."""
        return cls._get_connection(db_path)

    @classmethod
    def init_database(cls, db_path: Optional[Path] = None):
        """Initialize archive schema."""
        conn = cls._get_connection(db_path)
        try:
            conn.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    run_id VARCHAR PRIMARY KEY,
                    experiment VARCHAR,
                    seed UBIGINT,
                    n_traj INTEGER,
                    version VARCHAR,
                    passed BOOLEAN,
                    max_rel_err DOUBLE,
                    wall_time_s DOUBLE,
                    report_json VARCHAR,
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                )
            """)
            conn.execute("""
                CREATE TABLE IF NOT EXISTS run_checks (
                    run_id VARCHAR,
                    check_name VARCHAR,
                    passed BOOLEAN,
                    PRIMARY KEY (run_id, check_name)
                )
            """)
        finally:
            conn.close()

    @classmethod
    def save_report(cls, report: RunReport, db_path: Optional[Path] = None) -> str:
        """Insert a report and its checks; returns the run id."""
        cls.init_database(db_path)
        created = datetime.now()
        run_id = f"{report.experiment}_{report.seed}_{created.strftime('%Y%m%d%H%M%S%f')}"
        conn = cls._get_connection(db_path)
        try:
            conn.execute("""
                INSERT INTO runs (run_id, experiment, seed, n_traj, version, passed,
                                  max_rel_err, wall_time_s, report_json, created_at)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
            """, [
                run_id, report.experiment, report.seed, report.config.n_traj, report.version,
                report.passed, report.max_rel_err, report.wall_time,
                json.dumps(report.to_dict(), sort_keys=True), created,
            ])
            for name, ok in report.checks.items():
                conn.execute(
                    "INSERT INTO run_checks (run_id, check_name, passed) VALUES (?, ?, ?)",
                    [run_id, name, ok],
                )
        finally:
            conn.close()
        logger.info(f"Archived run {run_id} ({'passed' if report.passed else 'FAILED'})")
        return run_id

    @classmethod
    def list_runs(cls, experiment: Optional[str] = None, db_path: Optional[Path] = None) -> pl.DataFrame:
        """Runs ordered by creation time, optionally filtered by experiment."""
        cls.init_database(db_path)
        conn = cls._get_connection(db_path)
        try:
            query = """
                SELECT run_id, experiment, seed, n_traj, version, passed, max_rel_err, wall_time_s, created_at
                FROM runs
            """
            if experiment is None:
                return conn.execute(query + " ORDER BY created_at, run_id").pl()
            return conn.execute(query + " WHERE experiment = ? ORDER BY created_at, run_id", [experiment]).pl()
        finally:
            conn.close()

    @classmethod
    def get_report(cls, run_id: str, db_path: Optional[Path] = None) -> Optional[Dict]:
        """Stored report document, or None when the run id is unknown."""
        cls.init_database(db_path)
        conn = cls._get_connection(db_path)
        try:
            row = conn.execute("SELECT report_json FROM runs WHERE run_id = ?", [run_id]).fetchone()
            return json.loads(row[0]) if row else None
        finally:
            conn.close()

    @classmethod
    def failed_checks(cls, db_path: Optional[Path] = None) -> List[Dict]:
        """Every failed check across the archive."""
        cls.init_database(db_path)
        conn = cls._get_connection(db_path)
        try:
            rows = conn.execute("""
                SELECT r.run_id, r.experiment, c.check_name
                FROM run_checks c JOIN runs r USING (run_id)
                WHERE NOT c.passed
                ORDER BY r.created_at, c.check_name
            """).fetchall()
            return [{"run_id": r[0], "experiment": r[1], "check": r[2]} for r in rows]
        finally:
            conn.close()
