# commands/__init__.py
import logging
from dataclasses import dataclass
from typing import Optional

from config import Config, RunConfig
from extensions import worker_pool
from models.errors import StictionLabError, exit_code_for
from utils.export_utils import ResultWriter

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NEGATIVE = 1


@dataclass
class RunContext:
    """Global CLI options shared by every command."""
    config_path: Optional[str] = None
    out_dir: Optional[str] = None
    threads: Optional[int] = None
    tol_override: Optional[float] = None

    def load_config(self):
        config = RunConfig.load(self.config_path)
        if self.tol_override is not None:
            config = config.with_tol_override(self.tol_override)
        return config


def run_command(ctx, name, body):
    """Run body(config, writer, mapper) -> exit status, write the manifest and
    exit with the status or the code of the error family."""
    run = ctx.find_object(RunContext) or RunContext()
    status = EXIT_OK
    writer = None
    try:
        config = run.load_config()
        writer = ResultWriter(run.out_dir or Config.OUT_DIR, name, config, Config.VERSION)
        threads = run.threads if run.threads is not None else Config.THREADS
        with worker_pool(threads) as mapper:
            status = body(config, writer, mapper)
        writer.write_manifest()
    except StictionLabError as e:
        status = exit_code_for(e)
        logger.error(f"{name} failed: {e}")
        if writer is not None and writer.files:
            try:
                writer.write_manifest()
            except StictionLabError as export_error:
                logger.error(f"{name}: manifest not written: {export_error}")
    if status:
        ctx.exit(status)
