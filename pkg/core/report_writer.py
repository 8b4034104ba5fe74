"""Report writer for the JSON output format."""

import json
import sys
from pathlib import Path
from typing import List, Optional, Union

from .schemas import RunReport


def dump_json(payload) -> str:
    """Stable serialization: sorted keys, fixed separators, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


class ReportWriter:
    """Writes reports to stdout or to a file."""

    def __init__(self, out: Optional[Path] = None):
        self.out = Path(out) if out is not None else None
        if self.out is not None:
            self.out.parent.mkdir(parents=True, exist_ok=True)

    def render(self, report: Union[RunReport, List[RunReport]]) -> str:
        if isinstance(report, list):
            return dump_json([r.model_dump(mode="json") for r in report])
        return dump_json(report.model_dump(mode="json"))

    def write(self, report: Union[RunReport, List[RunReport]]) -> str:
        text = self.render(report)
        if self.out is None:
            sys.stdout.write(text)
        else:
            self.out.write_text(text)
        return text
