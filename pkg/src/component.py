import logging
import os
import sys

from keboola.component.base import ComponentBase
from keboola.component.exceptions import UserException

from configuration import RunConfig
from duckdb_client import DuckDB
from runner import EXIT_ERROR, RunOutcome, ToolkitRunner

FILE_PARAMETERS = ("system", "spec", "input", "inputs", "witness")


class Component(ComponentBase):
    """Runs one toolkit subcommand from the ``parameters`` block of config.json."""

    def __init__(self, debug=False):
        super().__init__()

        # Load and validate configuration using Pydantic
        self.config = RunConfig(**self._resolve_paths(dict(self.configuration.parameters)))
        if debug or self.config.debug:
            logging.getLogger().setLevel(logging.DEBUG)
        logging.info("Loading configuration...")

        self.duckdb_processor = DuckDB()

    def _resolve_paths(self, parameters: dict) -> dict:
        """Input files are looked up in in/files, outputs are staged in out/files."""
        for name in FILE_PARAMETERS:
            value = parameters.get(name)
            if value and not os.path.isabs(value):
                parameters[name] = os.path.join(self.files_in_path, value)
        parameters["out"] = os.path.join(self.files_out_path, parameters.get("out", "results"))
        return parameters

    def run(self):
        """Run the subcommand, publish its tables and save the run summary to state."""
        try:
            outcome = ToolkitRunner(self.config).run()
            self._publish_tables(outcome)
            self._save_final_state(outcome)
        finally:
            self.duckdb_processor.close()

        if outcome.exit_code == EXIT_ERROR:
            raise UserException(f"Subcommand '{self.config.subcommand.value}' failed, see the log for details")
        logging.info(f"Run finished with exit code {outcome.exit_code}: {outcome.summary}")

    def _publish_tables(self, outcome: RunOutcome):
        """Copy every CSV output to out/tables, without provenance lines, and write its manifest."""
        for name, path in outcome.outputs.items():
            if not path.endswith(".csv"):
                continue
            table_name = f"{self.config.subcommand.value}_{os.path.basename(path)}"
            output_path = os.path.join(self.tables_out_path, table_name)
            columns = self.duckdb_processor.export_without_header(path, output_path)
            table_def = self.create_out_table_definition(
                name=table_name,
                incremental=False,
                schema=columns,
                has_header=True,
            )
            self.write_manifest(table_def)
            logging.debug(f"Published {name} as table {table_name}")

    def _save_final_state(self, outcome: RunOutcome):
        self.write_state_file(
            {
                "subcommand": self.config.subcommand.value,
                "seed": self.config.seed,
                "exit_code": outcome.exit_code,
                "summary": outcome.summary,
                "outputs": sorted(os.path.basename(p) for p in outcome.outputs.values()),
            }
        )
        logging.info("Final state saved successfully")


# ============================================================================
# Main Entry Point
# ============================================================================

if __name__ == "__main__":
    if len(sys.argv) > 1:
        debug_arg = sys.argv[1]
    else:
        debug_arg = False
    try:
        comp = Component(debug_arg)
        comp.run()
    except UserException as exc:
        logging.error(exc)
        exit(1)
    except Exception as exc:
        logging.exception(exc)
        exit(1)
