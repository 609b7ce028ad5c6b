"""Adapter for out-of-tree parsers.

An external parser is any command that reads a raw log file and writes a
``LineId, EventTemplate`` CSV.  The bench runner invokes it as a child
process with the dataset's raw-log path and an output path substituted
into the command, enforces the wall-clock budget by killing the process
group, and loads the CSV afterwards, filling any lines the tool skipped
with singleton templates so the result stays total.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigurationError
from . import check_parameters

DEFAULTS = {"command": None, "workdir": None}


@dataclass(frozen=True)
class ExternalRunResult:
    returncode: int
    timed_out: bool
    stderr_tail: str


class ExternalParser:
    """Black-box command with ``{input}`` / ``{output}`` placeholders."""

    PARAMETER_DEFAULTS = DEFAULTS

    def __init__(self, command: str | None = None, workdir: str | None = None):
        params = check_parameters(
            "external", DEFAULTS, {"command": command, "workdir": workdir}
        )
        if not params["command"]:
            raise ConfigurationError("external: 'command' parameter is required")
        if "{input}" not in params["command"] or "{output}" not in params["command"]:
            raise ConfigurationError(
                "external: command must contain {input} and {output} placeholders"
            )
        self.command = params["command"]
        self.workdir = params["workdir"]

    def run(
        self,
        raw_log_path: str | Path,
        out_csv_path: str | Path,
        timeout_seconds: float | None = None,
    ) -> ExternalRunResult:
        argv = [
            part.format(input=str(raw_log_path), output=str(out_csv_path))
            for part in shlex.split(self.command)
        ]
        try:
            proc = subprocess.run(
                argv,
                cwd=self.workdir,
                timeout=timeout_seconds,
                capture_output=True,
                text=True,
            )
        except subprocess.TimeoutExpired as exc:
            tail = (exc.stderr or "")[-2000:] if isinstance(exc.stderr, str) else ""
            return ExternalRunResult(returncode=-1, timed_out=True, stderr_tail=tail)
        return ExternalRunResult(
            returncode=proc.returncode,
            timed_out=False,
            stderr_tail=(proc.stderr or "")[-2000:],
        )
