"""JSON and CSV file helpers built on the REST framework codecs."""
import csv
import io
import os
import tempfile
from pathlib import Path

from rest_framework.exceptions import ParseError
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from apps.core.exceptions import ConfigurationError


def read_json(path, label='file'):
    """
    Parse a JSON document from disk.

    Args:
        path: file path
        label: name used in error messages (e.g. ``mdp_path``)

    Returns:
        dict or list: parsed document
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f'config: {label} not found', path=str(path))
    try:
        with path.open('rb') as stream:
            return JSONParser().parse(stream)
    except ParseError as exc:
        raise ConfigurationError(
            f'config: {label} is not valid JSON', path=str(path),
            detail=str(exc.detail),
        ) from exc


def parse_json_text(text, label='value'):
    """Parse a JSON string given on the command line."""
    try:
        return JSONParser().parse(io.BytesIO(text.encode('utf-8')))
    except ParseError as exc:
        raise ConfigurationError(
            f'config: {label} is not valid JSON', detail=str(exc.detail),
        ) from exc


def render_json(data):
    """Render ``data`` as indented UTF-8 JSON bytes."""
    return JSONRenderer().render(data, renderer_context={'indent': 2})


def render_csv(header, rows):
    """Render rows as CSV text with a header line."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue().encode('utf-8')


def write_atomic(path, data):
    """
    Write bytes to ``path`` through a temporary file and a rename.

    Args:
        path: destination file
        data: bytes or str

    Returns:
        Path: the destination
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode('utf-8')
    fd, tmp_name = tempfile.mkstemp(
        dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp'
    )
    try:
        with os.fdopen(fd, 'wb') as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path
