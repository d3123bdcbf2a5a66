import logging
import os
import shutil
import tempfile

import duckdb
import numpy as np
from duckdb import DuckDBPyConnection

from system_model import InputSignal

# DuckDB temporary directory configuration
DUCK_DB_DIR = os.path.join(os.environ.get("TMPDIR", "/tmp"), "duckdb")

# prefix of the provenance lines written above every table
HEADER_PREFIX = "# "


class DuckDB:
    """Reads input-signal CSV files and writes result tables through DuckDB."""

    def __init__(self, header_lines: list[str] | None = None):
        self.header_lines = header_lines or []
        self.con = None

    @staticmethod
    def _init_connection(threads: int = 1, max_memory: int = 512, db_path: str = ":memory:") -> DuckDBPyConnection:
        """
        Returns connection to a temporary in-memory DuckDB database. One
        thread keeps row order stable in exported files.
        """
        os.makedirs(DUCK_DB_DIR, exist_ok=True)
        config = {
            "temp_directory": DUCK_DB_DIR,
            "threads": threads,
            "max_memory": f"{max_memory}MB",
            "preserve_insertion_order": True,
        }
        logging.debug(f"Initializing DuckDB connection with config: {config}")
        return duckdb.connect(database=db_path, config=config)

    def setup_connection(self):
        if self.con:
            return  # already setup
        self.con = self._init_connection()

    def close(self):
        if self.con:
            self.con.close()
            self.con = None

    def read_input_signal(self, path: str) -> InputSignal:
        """Load ``t,v1,...,vm`` rows; lines starting with '#' are skipped."""
        self.setup_connection()
        quoted = path.replace("'", "''")
        relation = self.con.sql(f"SELECT * FROM read_csv('{quoted}', header = true, comment = '#')")
        rows = relation.fetchall()
        if not rows:
            raise ValueError(f"input file {path} has no rows")
        columns = [c.lower() for c in relation.columns]
        if columns[0] != "t":
            raise ValueError(f"input file {path} must start with a 't' column, found '{relation.columns[0]}'")
        data = np.asarray(rows, dtype=float)
        data = data[np.argsort(data[:, 0], kind="stable")]
        logging.info(f"Loaded input signal with {data.shape[0]} pieces and {data.shape[1] - 1} channels from {path}")
        return InputSignal.from_rows(data)

    def write_table(self, output_path: str, columns: list[str], rows) -> str:
        """Export rows to CSV with a header block of provenance lines."""
        self.setup_connection()
        table = "result_" + os.path.splitext(os.path.basename(output_path))[0].replace("-", "_")
        definition = ", ".join(f'"{c}" DOUBLE' for c in columns)
        self.con.execute(f"CREATE OR REPLACE TABLE {table} ({definition});")
        rows = [tuple(float(v) for v in row) for row in rows]
        if rows:
            placeholders = ", ".join("?" for _ in columns)
            self.con.executemany(f"INSERT INTO {table} VALUES ({placeholders});", rows)

        with tempfile.TemporaryDirectory(dir=os.path.dirname(os.path.abspath(output_path))) as staging:
            body_path = os.path.join(staging, "body.csv")
            self.con.execute(f"COPY {table} TO '{body_path}' (HEADER, DELIMITER ',');")
            with open(output_path, "w") as out:
                for line in self.header_lines:
                    out.write(f"{HEADER_PREFIX}{line}\n")
                with open(body_path) as body:
                    shutil.copyfileobj(body, out)
        self.con.execute(f"DROP TABLE {table};")
        logging.info(f"Data exported to {output_path}")
        return output_path

    def write_input_signal(self, output_path: str, signal: InputSignal) -> str:
        columns = ["t"] + [f"v{i}" for i in range(1, signal.dimension + 1)]
        rows = [(t, *values) for t, values in zip(signal.breakpoints, signal.values)]
        return self.write_table(output_path, columns, rows)

    def export_without_header(self, source_path: str, output_path: str) -> list[str]:
        """Copy a result table without its provenance block; returns the column names."""
        self.setup_connection()
        quoted = source_path.replace("'", "''")
        relation = self.con.sql(f"SELECT * FROM read_csv('{quoted}', header = true, comment = '#')")
        self.con.execute(f"COPY ({relation.sql_query()}) TO '{output_path}' (HEADER, DELIMITER ',');")
        return list(relation.columns)
