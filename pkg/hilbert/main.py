# Main interface

import argparse
import logging
import os
import sys

from hilbert.core import MODES, RUNNERS, RunConfig
from hilbert.utils import HilbertError, error_exit

LOG_LEVELS = {'quiet': logging.WARNING, 'info': logging.INFO, 'debug': logging.DEBUG}


def _labels(text):
    return tuple(l.strip() for l in text.split(',') if l.strip())

def _grid(text):
    try:
        if ':' in text:
            start, stop, step = (int(v) for v in text.split(':'))
            if step <= 0:
                raise ValueError
            return tuple(range(start, stop + 1, step))
        return tuple(int(v) for v in text.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid `{text}`") from None

def _parser():
    parser = argparse.ArgumentParser(prog='hilbert',
                                     description='Discover polynomial laws from axioms and data, with proof certificates.')
    sub = parser.add_subparsers(dest='subcommand', required=True)

    def theory(p):
        p.add_argument('-t', '--theory', type=str, required=True, help='Theory file (.cfg).')

    def overrides(p):
        p.add_argument('--solver', type=str, choices=('auto', 'exact', 'float'), help='LP solver. Default: from the theory file, else auto.')
        p.add_argument('--tau', type=int, help='Sparsity budget: at most this many axioms.')
        p.add_argument('--lambda', dest='lambda_', type=float, help='Weight of the distance term.')
        p.add_argument('--sos', type=str, choices=('sdp', 'dsos'), help='SOS cone: exact PSD or diagonally dominant.')

    p = sub.add_parser('discover', help='Search for a law and its certificate, raising the degree until one verifies.')
    theory(p)
    overrides(p)
    p.add_argument('-d', '--data', type=str, help='CSV data file. Default: none (theory only).')
    p.add_argument('--mode', type=str, choices=tuple(MODES), help='Objective preset.')
    p.add_argument('--deg-start', dest='degree_start', type=int, help='First certificate degree.')
    p.add_argument('--deg-step', dest='degree_step', type=int, help='Degree increment.')
    p.add_argument('--deg-max', dest='degree_max', type=int, help='Last certificate degree.')
    p.add_argument('--seed', type=int, help='Seed, recorded as [report] seed in report.cfg.')
    p.add_argument('--dump-lp', dest='dump_lp', type=str, help='Write each assembled problem in LP format to this path.')
    p.add_argument('-o', '--output', type=str, help='Directory for report.txt, report.cfg, certificate.cfg and stats.cfg.')

    p = sub.add_parser('verify', help='Check a certificate exactly against a theory.')
    theory(p)
    p.add_argument('-c', '--cert', type=str, required=True, help='Certificate file.')

    p = sub.add_parser('distance', help='Coefficient distance between a polynomial and the theory.')
    theory(p)
    overrides(p)
    p.add_argument('-q', '--poly', type=str, required=True, help='Polynomial, e.g. "x - y".')
    p.add_argument('--caps', type=int, help='Total degree cap of the multipliers.')
    p.add_argument('--norm', type=int, choices=(1, 2), default=2, help='Coefficient norm. Default: 2.')
    p.add_argument('-o', '--output', type=str, help='Write the projection certificate here.')

    p = sub.add_parser('gen-data', help='Sample synthetic data from the [synthetic] section of a theory file.')
    theory(p)
    p.add_argument('-m', '--rows', type=int, help='Number of rows.')
    p.add_argument('--noise', type=float, help='Relative Gaussian noise on the dependent variable.')
    p.add_argument('--seed', type=int, help='Random seed.')
    p.add_argument('-o', '--output', type=str, help='CSV file. Default: stdout.')

    p = sub.add_parser('check-theory', help='Validate a theory and search for an inconsistency certificate.')
    theory(p)
    overrides(p)
    p.add_argument('--caps', type=int, help='Total degree cap of the multipliers.')

    p = sub.add_parser('bound', help='Optimise the [objective] of a linear theory; print the bound and its certificate.')
    theory(p)
    overrides(p)

    p = sub.add_parser('sweep', help='Rerun discovery on growing prefixes of the data and report where the law is recovered.')
    theory(p)
    overrides(p)
    p.add_argument('-d', '--data', type=str, help='CSV data file. Default: sample from the [synthetic] section.')
    p.add_argument('-q', '--target', dest='poly', type=str, help='Law to recover. Default: the [synthetic] ground truth.')
    p.add_argument('--mode', type=str, choices=tuple(MODES), help='Objective preset.')
    p.add_argument('--remove', type=_labels, help='Comma-separated axioms to leave out, or `all`.')
    p.add_argument('--modulo', type=_labels, help='Comma-separated axioms; the law is compared modulo their ideal.')
    p.add_argument('--grid', type=_grid, help='Data counts, as `1,2,5,10` or `start:stop:step` (stop included).')
    p.add_argument('--noise', type=float, help='Relative Gaussian noise of the sampled data. Default: 0.')
    p.add_argument('--seed', type=int, help='Random seed of the sampled data.')
    p.add_argument('-o', '--output', type=str, help='CSV file with one row per data count.')
    return parser

_OVERRIDES = ('solver', 'tau', 'lambda_', 'sos', 'degree_start', 'degree_step', 'degree_max')
_FIELDS = ('theory', 'data', 'cert', 'output', 'mode', 'poly', 'caps', 'norm', 'rows', 'noise', 'seed', 'dump_lp',
           'remove', 'modulo', 'grid')

def configFromArgs(args, verbose=True):
    values = vars(args)
    overrides = {k: values[k] for k in _OVERRIDES if values.get(k) is not None}
    fields = {k: values[k] for k in _FIELDS if values.get(k) is not None}
    return RunConfig(args.subcommand, overrides=overrides, verbose=verbose, **fields)

def setupLogging():
    level = os.environ.get('HILBERT_LOG', 'info').strip().lower()
    if level not in LOG_LEVELS:
        error_exit("Bad HILBERT_LOG", f"expected one of {', '.join(LOG_LEVELS)}, got `{level}`")
    logging.basicConfig(level=LOG_LEVELS[level], format='%(message)s', stream=sys.stderr)
    return level

def main(argv=None):
    level = setupLogging()
    args = _parser().parse_args(argv)
    config = configFromArgs(args, verbose=level != 'quiet')
    try:
        _, code = RUNNERS[config.subcommand](config)
    except HilbertError as e:
        error_exit(f"{config.subcommand} failed", type(e).__name__, e)
    except OSError as e:
        error_exit("I/O error", e.strerror or str(e), e.filename)
    sys.exit(code)


if __name__ == '__main__':
    main()
