"""
Main CLI application for the dalat toolkit.
"""
import json
import logging
import sys

import click

import calculus as calc
import config
import exporter
import lattice as lat
import rational
import realization as rz
from errors import DalatError
from realization import RationalScalarFunction
from verify import GROUPS, VerifyConfig, verify_suite


EXIT_FAILED = 1
EXIT_ERROR = 2


class ComplexParam(click.ParamType):
    """A complex number written as RE,IM or as a plain real."""

    name = 'complex'

    def convert(self, value, param, ctx):
        if isinstance(value, complex):
            return value
        try:
            parts = [float(p) for p in str(value).split(',')]
        except ValueError:
            self.fail(f"{value!r} is not RE,IM or a real number", param, ctx)
        if len(parts) == 1:
            return complex(parts[0], 0.0)
        if len(parts) == 2:
            return complex(parts[0], parts[1])
        self.fail(f"{value!r} is not RE,IM or a real number", param, ctx)


COMPLEX = ComplexParam()


def _coefficients(text: str):
    try:
        return [complex(c.strip().replace('i', 'j')) for c in text.split(',') if c.strip()]
    except ValueError as e:
        raise click.BadParameter(f"cannot parse coefficients '{text}': {e}")


def _fail(e: Exception) -> None:
    click.echo(f"Error: {e}", err=True)
    sys.exit(EXIT_ERROR)


def _write_function(f, out, fmt):
    if out:
        exporter.export_values(f, fmt, out)
        click.echo(f"✓ Wrote {out}")
    else:
        click.echo(json.dumps(exporter.function_to_dict(f), indent=2))


@click.group()
@click.option('--tol', type=float, default=None, help='Relative tolerance (default from DALAT_REL_TOL)')
@click.option('--seed', type=int, default=config.SEED, help='Random seed for the verification suite')
@click.option('--log-level', default=config.LOG_LEVEL, help='Log level (DEBUG, INFO, WARNING, ...)')
@click.pass_context
def cli(ctx, tol, seed, log_level):
    """dalat - discrete analytic functions on rhombic lattices"""
    logging.basicConfig(level=log_level.upper(), format=config.LOG_FORMAT, stream=sys.stderr)
    ctx.ensure_object(dict)
    ctx.obj['tol'] = tol
    ctx.obj['seed'] = seed


# -- lattice -------------------------------------------------------------------

@cli.group()
def lattice():
    """Generate and validate lattice patches."""
    pass


@lattice.command('gen')
@click.option('--kind', type=click.Choice(['square', 'rhombic']), default='square', help='Lattice kind')
@click.option('--radius', type=int, required=True, help='Patch radius')
@click.option('--alpha', type=float, default=None, help='Rhombus angle in radians (rhombic only)')
@click.option('-o', '--out', required=True, help='Output lattice JSON file')
def lattice_gen(kind, radius, alpha, out):
    """Generate a square or rhombic patch."""
    try:
        patch = lat.generate(kind, radius, alpha)
        lat.save(patch, out)
        click.echo(f"✓ {kind} lattice: {len(patch.vertices)} vertices, {len(patch.edges)} edges, "
                   f"{len(patch.faces)} faces -> {out}")
    except (DalatError, OSError) as e:
        _fail(e)


@lattice.command('validate')
@click.argument('path')
def lattice_validate(path):
    """Validate a lattice file (exit 0 iff every invariant holds)."""
    try:
        with open(path, 'r') as f:
            data = json.load(f)
        report = lat.validate(lat.from_dict(data))
    except (json.JSONDecodeError, DalatError, OSError) as e:
        _fail(e)
    for check in report.checks:
        mark = '✓' if check.ok else '✗'
        click.echo(f"{mark} {check.name}" + (f": {check.detail}" if check.detail else ""))
    if report.leashless:
        click.echo(f"  leashless vertices: {', '.join(str(v) for v in report.leashless)}")
    sys.exit(0 if report.ok else EXIT_FAILED)


# -- calculus ------------------------------------------------------------------

@cli.command()
@click.option('--lattice', 'lattice_path', required=True, help='Lattice JSON file')
@click.option('--n', 'depth', type=int, required=True, help='Highest basis index N')
@click.option('--duffin', is_flag=True, help='Export the Duffin basis instead of z^(n)')
@click.option('-o', '--out', required=True, help='Output CSV file')
def basis(lattice_path, depth, duffin, out):
    """Export z^(0..N) (or rho_0..rho_N) as CSV."""
    try:
        patch = lat.load(lattice_path)
        functions = calc.duffin_basis(patch, depth) if duffin else calc.monomial_basis(patch, depth)
        exporter.export_basis(functions, out)
        click.echo(f"✓ Wrote {len(functions)} basis functions to {out}")
    except (DalatError, OSError, ValueError) as e:
        _fail(e)


@cli.command()
@click.option('--lattice', 'lattice_path', required=True, help='Lattice JSON file')
@click.option('--t', 't', type=COMPLEX, required=True, help='Parameter t as RE,IM')
@click.option('-o', '--out', default=None, help='Output file (prints JSON when omitted)')
@click.option('--format', 'fmt', type=click.Choice(exporter.FORMATS), default='json', help='Output format')
def eigen(lattice_path, t, out, fmt):
    """Evaluate the eigenfunction e_t."""
    try:
        patch = lat.load(lattice_path)
        _write_function(calc.exp_basis(patch, t), out, fmt)
    except (DalatError, OSError) as e:
        _fail(e)


@cli.command()
@click.argument('direction', type=click.Choice(['fwd', 'bwd']))
@click.option('--lattice', 'lattice_path', required=True, help='Lattice JSON file')
@click.option('--fn', 'fn_path', required=True, help='Function JSON file')
@click.option('-o', '--out', default=None, help='Output file (prints JSON when omitted)')
@click.option('--format', 'fmt', type=click.Choice(exporter.FORMATS), default='json', help='Output format')
@click.pass_context
def shift(ctx, direction, lattice_path, fn_path, out, fmt):
    """Apply the forward or backward shift to a function."""
    try:
        patch = lat.load(lattice_path)
        f = exporter.load_function(fn_path, patch)
        op = calc.forward_shift if direction == 'fwd' else calc.backward_shift
        _write_function(op(f, ctx.obj['tol']), out, fmt)
    except (DalatError, OSError) as e:
        _fail(e)


@cli.command()
@click.option('--lattice', 'lattice_path', required=True, help='Lattice JSON file')
@click.option('--fn', 'fn_path', required=True, help='Function JSON file')
@click.option('--format', 'fmt', type=click.Choice(exporter.FORMATS), required=True, help='Output format')
@click.option('-o', '--out', required=True, help='Output file')
def export(lattice_path, fn_path, fmt, out):
    """Re-export a function file as CSV or JSON."""
    try:
        patch = lat.load(lattice_path)
        exporter.export_values(exporter.load_function(fn_path, patch), fmt, out)
        click.echo(f"✓ Wrote {out}")
    except (DalatError, OSError) as e:
        _fail(e)


# -- realizations --------------------------------------------------------------

@cli.command()
@click.argument('operation', type=click.Choice(['eval', 'sum', 'mul', 'inv']))
@click.option('--lattice', 'lattice_path', required=True, help='Lattice JSON file')
@click.option('-r', 'first', required=True, help='Realization JSON file')
@click.option('-s', 'second', default=None, help='Second realization (sum, mul)')
@click.option('-o', '--out', default=None, help='Output file (prints JSON when omitted)')
@click.option('--format', 'fmt', type=click.Choice(exporter.FORMATS), default='json', help='Format for eval')
def real(operation, lattice_path, first, second, out, fmt):
    """Evaluate, add, multiply or invert realizations."""
    try:
        patch = lat.load(lattice_path)
        r1 = rz.load(first)
        if operation == 'eval':
            _write_function(rz.evaluate(r1, patch), out, fmt)
            return
        if operation in ('sum', 'mul'):
            if second is None:
                raise click.UsageError(f"'{operation}' needs a second realization (-s)")
            r2 = rz.load(second)
            result = rz.add(r1, r2) if operation == 'sum' else rz.product(r1, r2)
        else:
            result = rz.inverse(r1, patch)
        if out:
            rz.save(result, out)
            click.echo(f"✓ Realization with state dimension {result.state_dim} -> {out}")
        else:
            click.echo(json.dumps(rz.to_dict(result), indent=2))
    except (DalatError, OSError) as e:
        _fail(e)


@cli.group()
def tau():
    """The tau transform and its inverse."""
    pass


@tau.command('fwd')
@click.option('-r', 'path', required=True, help='Realization JSON file')
@click.option('--t', 't', type=COMPLEX, required=True, help='Point t as RE,IM')
def tau_fwd(path, t):
    """Evaluate tau f(t) = D + tC(I - tA)^-1 B."""
    try:
        value = rz.tau_eval(rz.load(path), t)
        for row in value:
            click.echo("  ".join(f"{x.real:.15g}{x.imag:+.15g}j" for x in row))
    except (DalatError, OSError) as e:
        _fail(e)


@tau.command('inv')
@click.option('--num', required=True, help='Numerator coefficients c0,c1,...')
@click.option('--den', required=True, help='Denominator coefficients d0,d1,...')
@click.option('--lattice', 'lattice_path', required=True, help='Lattice JSON file')
@click.option('-o', '--out', default=None, help='Output realization file (prints JSON when omitted)')
def tau_inv(num, den, lattice_path, out):
    """Realize num(t)/den(t) as a rational DA function."""
    try:
        patch = lat.load(lattice_path)
        fraction = RationalScalarFunction(_coefficients(num), _coefficients(den))
        result = rz.tau_inverse(fraction, patch)
        if out:
            rz.save(result, out)
            click.echo(f"✓ Realization with state dimension {result.state_dim} -> {out}")
        else:
            click.echo(json.dumps(rz.to_dict(result), indent=2))
    except (DalatError, OSError) as e:
        _fail(e)


# -- rational ------------------------------------------------------------------

@cli.command()
@click.option('--lattice', 'lattice_path', required=True, help='Lattice JSON file')
@click.option('--w', 'w', type=int, required=True, help='Vertex id of the kernel centre')
@click.option('--m', 'M', type=float, default=2.0, help='Kernel scale M > 1')
@click.option('-o', '--out', default=None, help='Output file (prints JSON when omitted)')
@click.option('--format', 'fmt', type=click.Choice(exporter.FORMATS), default='csv', help='Output format')
def kernel(lattice_path, w, M, out, fmt):
    """Evaluate the reproducing kernel K_w."""
    try:
        patch = lat.load(lattice_path)
        _write_function(rational.kernel(patch, w, M).values, out, fmt)
    except (DalatError, OSError) as e:
        _fail(e)


@cli.command()
@click.option('-r', 'path', required=True, help='Realization JSON file')
@click.option('--lattice', 'lattice_path', required=True, help='Lattice JSON file')
def certify(path, lattice_path):
    """Print DA polynomials p, q with p (.) f = q."""
    try:
        patch = lat.load(lattice_path)
        f = rational.RationalDA.from_realization(rz.load(path), patch)
        p, q = rational.quotient_certificate(f)
        residual = rational.certificate_residual(f, p, q)
        click.echo(json.dumps({
            'p': [[c.real, c.imag] for c in p.scalar_coefficients],
            'q': [rz.encode_matrix(c) for c in q.coefficients],
            'residual': residual,
        }, indent=2))
    except (DalatError, OSError) as e:
        _fail(e)


@cli.command()
@click.option('--lattice', 'lattice_path', required=True, help='Lattice JSON file')
@click.option('--fn', 'fn_path', required=True, help='Function JSON file')
@click.option('--k', 'K', type=int, required=True, help='Number of backward shifts')
@click.option('--rank-tol', type=float, default=None, help='Relative rank threshold (default from DALAT_RANK_TOL)')
def rank(lattice_path, fn_path, K, rank_tol):
    """Numerical rank of f, Z- f, ..., Z-^K f."""
    try:
        patch = lat.load(lattice_path)
        f = exporter.load_function(fn_path, patch)
        click.echo(rational.shift_rank(f, K, rank_tol))
    except (DalatError, OSError, ValueError) as e:
        _fail(e)


# -- verification --------------------------------------------------------------

@cli.command()
@click.option('--lattice', 'lattice_path', required=True, help='Lattice JSON file')
@click.option('--depth', type=int, default=config.BASIS_DEPTH, help='Basis depth N')
@click.option('--truncation', type=int, default=config.TRUNCATION, help='Series truncation')
@click.option('--group', 'groups', multiple=True, type=click.Choice(GROUPS), help='Property group (repeatable)')
@click.option('-o', '--out', default=None, help='Write the JSON report to this file')
@click.pass_context
def verify(ctx, lattice_path, depth, truncation, groups, out):
    """Run the property verification suite (exit 0 iff all pass)."""
    try:
        cfg = VerifyConfig(
            lattice_path=lattice_path,
            tolerance=ctx.obj['tol'] if ctx.obj['tol'] is not None else config.REL_TOL,
            depth=depth,
            truncation=truncation,
            seed=ctx.obj['seed'],
            groups=list(groups) if groups else list(GROUPS),
        )
        report = verify_suite(cfg)
        if out:
            with open(out, 'w') as f:
                f.write(report.to_json())
                f.write("\n")
    except (DalatError, OSError, ValueError) as e:
        _fail(e)
    click.echo(report.summary())
    if not report.ok:
        click.echo(f"Failing properties: {', '.join(report.failed)}", err=True)
        sys.exit(EXIT_FAILED)


if __name__ == '__main__':
    cli()
