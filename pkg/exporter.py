"""
Function file import and export (JSON and CSV).
"""
import csv
import json
import logging
from typing import Dict, List, Sequence

import numpy as np

from calculus import DAFunction
from errors import InvalidParameter, IoError, ParseError
from lattice import Lattice, lattice_hash

logger = logging.getLogger(__name__)

FORMATS = ('csv', 'json')


def function_to_dict(f: DAFunction) -> Dict:
    """Function JSON; values are keyed by vertex id in ascending id order."""
    data = {
        'lattice_hash': lattice_hash(f.lattice),
        'shape': list(f.shape),
        'values': {
            str(v): [[[float(x.real), float(x.imag)] for x in row] for row in f.at(v)]
            for v in f.lattice.ids
        },
    }
    if f.unresolved:
        data['unresolved'] = sorted(f.unresolved)
    return data


def function_from_dict(data, lattice: Lattice) -> DAFunction:
    """
    Rebuild a DAFunction on the given lattice.

    Raises:
        ParseError: on a schema violation or a lattice hash mismatch
    """
    if not isinstance(data, dict):
        raise ParseError("function JSON must be an object")
    for key in ('lattice_hash', 'shape', 'values'):
        if key not in data:
            raise ParseError(f"function JSON is missing '{key}'")
    if data['lattice_hash'] != lattice_hash(lattice):
        raise ParseError("function file was written for a different lattice")
    try:
        m, n = (int(x) for x in data['shape'])
        values = np.zeros((len(lattice.ids), m, n), dtype=complex)
        seen = set()
        for key, matrix in data['values'].items():
            vid = int(key)
            if vid not in lattice.index:
                raise ParseError(f"vertex {vid} is not in the lattice")
            array = np.asarray(matrix, dtype=float)
            if array.shape != (m, n, 2):
                raise ParseError(f"value at vertex {vid} is not a {m}x{n} matrix of [re, im] pairs")
            values[lattice.index[vid]] = array[..., 0] + 1j * array[..., 1]
            seen.add(vid)
    except (TypeError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"malformed function JSON: {e}") from e
    if len(seen) != len(lattice.ids):
        raise ParseError(f"function JSON covers {len(seen)} of {len(lattice.ids)} vertices")
    return DAFunction(lattice, values, frozenset(data.get('unresolved', [])))


def load_function(path: str, lattice: Lattice) -> DAFunction:
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except OSError as e:
        raise IoError(f"cannot read function file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path} is not valid JSON: {e}") from e
    return function_from_dict(data, lattice)


def _csv_rows(f: DAFunction) -> List[List]:
    scalar = f.shape == (1, 1)
    rows = []
    for v in f.lattice.ids:
        z = f.lattice.coordinate(v)
        value = f.at(v)
        for i in range(f.shape[0]):
            for j in range(f.shape[1]):
                prefix = [v] if scalar else [v, i, j]
                x = value[i, j]
                rows.append(prefix + [repr(z.real), repr(z.imag), repr(float(x.real)), repr(float(x.imag))])
    return rows


def _csv_header(f: DAFunction) -> List[str]:
    prefix = ['id'] if f.shape == (1, 1) else ['id', 'row', 'col']
    return prefix + ['re_z', 'im_z', 're_f', 'im_f']


def export_values(f: DAFunction, fmt: str, path: str) -> None:
    """
    Write the values of f in ascending vertex id order.

    Args:
        f: Function to export
        fmt: 'csv' or 'json'
        path: Output file

    Raises:
        InvalidParameter: on an unknown format
        IoError: if the file cannot be written
    """
    if fmt not in FORMATS:
        raise InvalidParameter(f"unknown export format '{fmt}'")
    try:
        with open(path, 'w', newline='') as out:
            if fmt == 'json':
                json.dump(function_to_dict(f), out, indent=2)
            else:
                writer = csv.writer(out, lineterminator='\n')
                writer.writerow(_csv_header(f))
                writer.writerows(_csv_rows(f))
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e
    logger.info(f"Exported {len(f.lattice.ids)} vertex values to {path}")


def export_basis(functions: Sequence[DAFunction], path: str) -> None:
    """CSV of a function family, one block of rows per index n."""
    if not functions:
        raise InvalidParameter("nothing to export")
    try:
        with open(path, 'w', newline='') as out:
            writer = csv.writer(out, lineterminator='\n')
            writer.writerow(['n'] + _csv_header(functions[0]))
            for n, f in enumerate(functions):
                writer.writerows([n] + row for row in _csv_rows(f))
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e
