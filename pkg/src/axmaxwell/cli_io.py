"""Command-line drivers and exporters (legacy VTK, CSV).

Subcommands: meshgen, singular, solve, synthesize, convergence, verify.
Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O failure.
Every failure prints a single machine-readable line on stderr.
"""

import argparse
import math
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import femcore, manufactured, mesh as meshmod, modal_ops, singular, solver
from .femcore import MeshQuadrature
from .linalg import SolverError
from .mesh import MeshError

_FLOAT_FMT = "%.17g"


class UsageError(ValueError):
    pass


# -- writers ------------------------------------------------------------------


def _vtk_scalar_arrays(name, values):
    """Split nodal data into named real scalar arrays.

    (n,) arrays give <name>_re / _im; (n, 3) arrays give
    <name>_<r|theta|z>_<re|im>.  Imaginary parts are kept only when nonzero
    somewhere (mode-0 quantities stay compact).
    """
    values = np.asarray(values)
    out = []
    if values.ndim == 1:
        comps = [("", values)]
    else:
        comps = [(f"_{c}", values[:, i]) for i, c in enumerate(("r", "theta", "z"))]
    for suffix, col in comps:
        col = np.asarray(col, dtype=complex)
        out.append((f"{name}{suffix}_re", col.real))
        if np.any(col.imag != 0.0):
            out.append((f"{name}{suffix}_im", col.imag))
    return out


def write_vtk(msh, point_fields, path, cell_fields=None, title="axmaxwell export"):
    """Legacy ASCII VTK unstructured grid of the meridian mesh.

    point_fields/cell_fields map names to (n,) or (n, 3) arrays (complex
    allowed; split into _re/_im scalar arrays).
    """
    names = []
    for name, _ in list(point_fields.items()) + list((cell_fields or {}).items()):
        if name in names:
            raise ValueError(f"duplicate field name {name!r}")
        names.append(name)
    with open(path, "w") as fp:
        fp.write("# vtk DataFile Version 3.0\n")
        fp.write(title + "\n")
        fp.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fp.write(f"POINTS {msh.num_vertices} double\n")
        for r, z in msh.vertices:
            fp.write(f"{_FLOAT_FMT} {_FLOAT_FMT} 0\n" % (r, z))
        nt = msh.num_triangles
        fp.write(f"CELLS {nt} {4 * nt}\n")
        for i, j, k in msh.triangles:
            fp.write(f"3 {i} {j} {k}\n")
        fp.write(f"CELL_TYPES {nt}\n")
        fp.write("5\n" * nt)
        if point_fields:
            fp.write(f"POINT_DATA {msh.num_vertices}\n")
            _write_vtk_data(fp, point_fields)
        if cell_fields:
            fp.write(f"CELL_DATA {nt}\n")
            _write_vtk_data(fp, cell_fields)


def _write_vtk_data(fp, field_map):
    for name, values in field_map.items():
        for arr_name, col in _vtk_scalar_arrays(name, values):
            fp.write(f"SCALARS {arr_name} double 1\nLOOKUP_TABLE default\n")
            for v in col:
                fp.write(f"{_FLOAT_FMT}\n" % v)


def write_vtk_wedges(points, wedges, point_fields, path, title="axmaxwell 3d export"):
    """Legacy ASCII VTK of a revolved grid; cells are 6-node wedges."""
    with open(path, "w") as fp:
        fp.write("# vtk DataFile Version 3.0\n")
        fp.write(title + "\n")
        fp.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fp.write(f"POINTS {len(points)} double\n")
        for x, y, z in points:
            fp.write(f"{_FLOAT_FMT} {_FLOAT_FMT} {_FLOAT_FMT}\n" % (x, y, z))
        fp.write(f"CELLS {len(wedges)} {7 * len(wedges)}\n")
        for w in wedges:
            fp.write("6 " + " ".join(str(int(i)) for i in w) + "\n")
        fp.write(f"CELL_TYPES {len(wedges)}\n")
        fp.write("13\n" * len(wedges))
        if point_fields:
            fp.write(f"POINT_DATA {len(points)}\n")
            _write_vtk_data(fp, point_fields)


def write_csv(path, header, rows):
    """CSV with a header row; floats are written with %.17g (round-trip)."""
    with open(path, "w") as fp:
        fp.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for v in row:
                if isinstance(v, (float, np.floating)):
                    cells.append(_FLOAT_FMT % v)
                elif isinstance(v, (complex, np.complexfloating)):
                    cells.append((_FLOAT_FMT + "%+" + _FLOAT_FMT[1:] + "j") % (v.real, v.imag))
                else:
                    cells.append(str(v))
            fp.write(",".join(cells) + "\n")


def read_csv(path):
    with open(path) as fp:
        lines = [ln.rstrip("\n") for ln in fp if ln.strip()]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


# -- run configuration -----------------------------------------------------------


@dataclass
class RunConfig:
    domain: str = "lshape"
    mesh_file: str = None
    h: float = 0.1
    rmin: float = 0.0
    rmax: float = 1.0
    zmin: float = 0.0
    zmax: float = 1.0
    corner_r: float = 0.5
    corner_z: float = 0.5
    field: str = "magnetic"
    rhs: str = "bandlimited"
    modes: int = 5
    tol: float = 1e-10
    theta_samples: int = None
    levels: int = 3
    outdir: str = "."
    threads: int = None
    k: int = None

    def space(self):
        if self.field not in ("electric", "magnetic"):
            raise UsageError(f"field must be electric or magnetic, got {self.field!r}")
        return femcore.SPACE_X if self.field == "electric" else femcore.SPACE_Y

    def thread_count(self):
        if self.threads is not None:
            return max(1, self.threads)
        return max(1, int(os.environ.get("AXMAXWELL_THREADS", "1")))


def load_config(path):
    out = {}
    try:
        with open(path) as fp:
            for lineno, raw in enumerate(fp, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key = value")
                key, val = (s.strip() for s in line.split("=", 1))
                out[key.replace("-", "_")] = val
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    return out


def build_config(args):
    cfg = RunConfig()
    overrides = {}
    if getattr(args, "config", None):
        overrides.update(load_config(args.config))
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            overrides[f.name] = val
    for key, val in overrides.items():
        if not hasattr(cfg, key):
            raise UsageError(f"unknown config key {key!r}")
        current = getattr(RunConfig, key, None)
        ftype = {f.name: f.type for f in fields(RunConfig)}[key]
        if isinstance(val, str) and ftype in (float, int):
            val = float(val) if ftype is float else int(val)
        setattr(cfg, key, val)
    return cfg


def build_mesh(cfg):
    if cfg.mesh_file:
        msh = meshmod.load_mesh(cfg.mesh_file)
        corners = meshmod.classify_boundary(msh)
    elif cfg.domain == "rectangle":
        msh = meshmod.gen_rectangle(cfg.rmin, cfg.rmax, cfg.zmin, cfg.zmax, cfg.h)
        corners = []
    elif cfg.domain == "lshape":
        msh, corner = meshmod.gen_lshape(
            cfg.corner_r, cfg.corner_z, cfg.rmax, cfg.zmin, cfg.zmax, cfg.h
        )
        corners = [corner]
    else:
        raise UsageError(f"unknown domain {cfg.domain!r}")
    if len(corners) > 1:
        raise UsageError("meshes with more than one reentrant corner are not supported")
    return msh, (corners[0] if corners else None)


# -- built-in right-hand sides -----------------------------------------------------


def _rhs_bandlimited(r, th, z):
    base = r * r * (1 - r) * z * (1 - z)
    return (
        base * (1.0 + 0.5 * math.cos(th) - 0.25 * math.sin(2 * th)),
        r * (1 - r) * (0.3 * math.sin(th) + 0.1 * math.cos(3 * th)),
        z * (1 - z) * (0.2 + 0.4 * math.cos(2 * th)),
    )


def _rhs_cos_theta_ez(r, th, z):
    return (0.0, 0.0, math.cos(th))


def _rhs_uniform_ez(r, th, z):
    return (0.0, 0.0, 1.0)


RHS_BUILTINS = {
    "bandlimited": _rhs_bandlimited,
    "cos_theta_ez": _rhs_cos_theta_ez,
    "uniform_ez": _rhs_uniform_ez,
}


def resolve_rhs(spec, msh):
    """Named built-in data, or 'file:<csv>' with nodal axisymmetric values.

    The tabulated form expects columns r,z,f_r,f_theta,f_z matching the
    mesh vertices (any order); values are interpolated as a P1 field and
    used as theta-independent data.
    """
    if spec in RHS_BUILTINS:
        return RHS_BUILTINS[spec]
    if spec.startswith("file:"):
        path = spec[5:]
        header, rows = read_csv(path)
        expected = ["r", "z", "f_r", "f_theta", "f_z"]
        if [h.strip() for h in header] != expected:
            raise UsageError(f"{path}: expected columns {','.join(expected)}")
        data = np.array([[float(c) for c in row] for row in rows])
        nodal = np.zeros((msh.num_vertices, 3))
        dist = np.linalg.norm(
            msh.vertices[None, :, :] - data[:, None, :2], axis=2
        )
        idx = dist.argmin(axis=1)
        if dist[np.arange(len(data)), idx].max() > 1e-9:
            raise UsageError(f"{path}: rows do not match mesh vertices")
        nodal[idx] = data[:, 2:]
        fld = femcore.ModeField(msh, 0, nodal.astype(complex))

        def f(r, th, z):
            return femcore.interpolate(fld, (r, z)).real

        return f
    raise UsageError(
        f"unknown rhs {spec!r}; builtins: {', '.join(sorted(RHS_BUILTINS))} or file:<csv>"
    )


# -- subcommand implementations ------------------------------------------------------


def _corner_report(corner):
    if corner is None:
        return "no reentrant corner"
    return (
        f"reentrant corner at (r={corner.position[0]:g}, z={corner.position[1]:g}): "
        f"interior angle {corner.interior_angle:.12g} rad, alpha {corner.alpha:.12g}, "
        f"phi0 {corner.phi0:.12g}, cutoff a {corner.a:g}"
    )


def cmd_meshgen(cfg, out):
    msh, corner = build_mesh(cfg)
    path = os.path.join(cfg.outdir, out or "mesh.txt")
    meshmod.save_mesh(msh, path)
    print(f"wrote {path}: {msh.num_vertices} vertices, {msh.num_triangles} triangles")
    print(_corner_report(corner))
    return 0


def cmd_singular(cfg, k, out):
    msh, corner = build_mesh(cfg)
    if corner is None:
        raise UsageError("singular bases need a domain with a reentrant corner")
    basis = singular.compute_basis(msh, corner, k, cfg.space(), tol=cfg.tol)
    prefix = os.path.join(cfg.outdir, out or f"basis_k{k}_{cfg.field}")
    centers = msh.vertices[msh.triangles].mean(axis=1)
    principal_cells = basis.principal.values(centers)
    write_vtk(
        msh,
        {"basis_total": basis.total_nodal(), "basis_regular": basis.regular.values},
        prefix + ".vtk",
        cell_fields={"principal": principal_cells},
        title=f"singular basis k={k} {cfg.field}",
    )
    write_csv(
        prefix + "_diag.csv",
        ["k", "field", "iterations", "residual", "energy", "curl_norm_sq"],
        [[k, cfg.field, basis.diagnostics["iterations"], basis.diagnostics["residual"],
          basis.diagnostics["energy"], basis.diagnostics["curl_norm_sq"]]],
    )
    print(f"wrote {prefix}.vtk and {prefix}_diag.csv")
    print(_corner_report(corner))
    return 0


def _solve(cfg):
    msh, corner = build_mesh(cfg)
    f = resolve_rhs(cfg.rhs, msh)
    sol = solver.solve_axisymmetric(
        msh,
        cfg.space(),
        f,
        N=cfg.modes,
        corner=corner,
        tol=cfg.tol,
        real_data=True,
        samples=cfg.theta_samples,
        threads=cfg.thread_count(),
    )
    return msh, corner, sol


def cmd_solve(cfg):
    msh, corner, sol = _solve(cfg)
    os.makedirs(cfg.outdir, exist_ok=True)
    rows = []
    for k in range(-cfg.modes, cfg.modes + 1):
        rec = sol.records[k]
        write_vtk(
            msh,
            {"field": rec.total_nodal()},
            os.path.join(cfg.outdir, f"mode_{'m' if k < 0 else 'p'}{abs(k)}.vtk"),
            title=f"mode {k} {cfg.field}",
        )
        diag = rec.diagnostics or {}
        rows.append(
            [k, complex(rec.coeff), diag.get("iterations", 0), diag.get("residual", 0.0),
             diag.get("coefficient_denominator", float(diag.get("alpha", 0.0)))]
        )
    write_csv(
        os.path.join(cfg.outdir, "summary.csv"),
        ["k", "C_k", "iterations", "residual", "coefficient_denominator"],
        rows,
    )
    print(f"wrote {2 * cfg.modes + 1} mode files and summary.csv in {cfg.outdir}")
    return 0


def cmd_synthesize(cfg, theta_samples):
    msh, corner, sol = _solve(cfg)
    os.makedirs(cfg.outdir, exist_ok=True)
    T = theta_samples
    thetas, points, fields_cyl = solver.sample_3d(sol, T)
    nv = msh.num_vertices
    pts = points.reshape(-1, 3)
    wedges = []
    for j in range(T):
        nxt = ((j + 1) % T) * nv
        cur = j * nv
        for tri in msh.triangles:
            wedges.append([cur + tri[0], cur + tri[1], cur + tri[2],
                           nxt + tri[0], nxt + tri[1], nxt + tri[2]])
    data = fields_cyl.reshape(-1, 3)
    path = os.path.join(cfg.outdir, "field3d.vtk")
    write_vtk_wedges(pts, wedges, {"field": data}, path)
    print(f"wrote {path}: {len(pts)} points, {len(wedges)} wedges")
    return 0


def cmd_convergence(cfg):
    space = cfg.space()
    mf = manufactured.for_space(space)
    ks = [cfg.k] if cfg.k is not None else [0, 1, 2]
    hs = [0.2 * 0.5 ** lev for lev in range(cfg.levels)]
    os.makedirs(cfg.outdir, exist_ok=True)
    rows = []
    for k in ks:
        errs = []
        for h in hs:
            msh = meshmod.gen_rectangle(0.0, 1.0, 0.0, 1.0, h)
            quad = MeshQuadrature(msh)
            system = modal_ops.assemble_a_k(msh, k, space, quad=quad)
            fvec = mf.curl(quad.xy, k)
            gvec = mf.div(quad.xy, k)
            rec = solver.solve_mode_orthogonal(
                msh, solver.ModeProblem(k, space, fvec, gvec), None, system, tol=cfg.tol
            )
            l2, en = solver.error_norms(
                rec.field, lambda p: mf.u(p)[0], exact_curl=fvec, exact_div=gvec,
                quad=quad, k=k,
            )
            errs.append((h, l2, en))
        logs = np.log([e[0] for e in errs])
        rate_l2 = np.polyfit(logs, np.log([e[1] for e in errs]), 1)[0]
        rate_en = np.polyfit(logs, np.log([e[2] for e in errs]), 1)[0]
        for h, l2, en in errs:
            rows.append([k, h, l2, en, rate_l2, rate_en])
        print(f"k={k}: fitted L2 rate {rate_l2:.3f}, energy rate {rate_en:.3f}")
    path = os.path.join(cfg.outdir, "convergence.csv")
    write_csv(path, ["k", "h", "l2_error", "energy_error", "l2_rate", "energy_rate"], rows)
    print(f"wrote {path}")
    return 0


def cmd_verify():
    from . import verification

    results = verification.run_all()
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} criterion {res.number}: {res.name} ({res.detail})")
        failed += 0 if res.passed else 1
    print(f"{len(results) - failed}/{len(results)} criteria passed")
    return 0 if failed == 0 else 2


# -- argument parsing ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--domain", choices=["rectangle", "lshape"], help="built-in domain")
    p.add_argument("--mesh-file", dest="mesh_file", help="load mesh from file instead")
    p.add_argument("--h", type=float, help="nominal mesh size")
    p.add_argument("--rmin", type=float)
    p.add_argument("--rmax", type=float)
    p.add_argument("--zmin", type=float)
    p.add_argument("--zmax", type=float)
    p.add_argument("--corner-r", dest="corner_r", type=float, help="L-shape corner radius")
    p.add_argument("--corner-z", dest="corner_z", type=float, help="L-shape corner height")
    p.add_argument("--field", choices=["electric", "magnetic"])
    p.add_argument("--tol", type=float, help="iterative solver tolerance")
    p.add_argument("--outdir", help="output directory")
    p.add_argument("--threads", type=int, help="mode-solve thread count")


def make_parser():
    parser = _Parser(prog="axmaxwell", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("meshgen", help="generate a meridian mesh file")
    _add_common(p)
    p.add_argument("--out", help="mesh file name (default mesh.txt)")

    p = sub.add_parser("singular", help="compute and export a singular basis")
    _add_common(p)
    p.add_argument("--k", type=int, required=True, help="Fourier mode")
    p.add_argument("--out", help="output prefix")

    p = sub.add_parser("solve", help="solve all modes and export fields")
    _add_common(p)
    p.add_argument("--rhs", help="named built-in data or file:<csv>")
    p.add_argument("--modes", type=int, help="truncation order N")
    p.add_argument("--theta-samples", dest="theta_samples", type=int)

    p = sub.add_parser("synthesize", help="solve and export the revolved 3D field")
    _add_common(p)
    p.add_argument("--rhs")
    p.add_argument("--modes", type=int)
    p.add_argument("--theta-samples", dest="theta_samples", type=int, default=16)

    p = sub.add_parser("convergence", help="manufactured convergence study")
    _add_common(p)
    p.add_argument("--levels", type=int, help="number of refinements")
    p.add_argument("--k", type=int, help="single mode (default 0,1,2)")

    sub.add_parser("verify", help="run the acceptance property suite")
    return parser


def main(argv=None):
    try:
        args = make_parser().parse_args(argv)
        if args.command == "verify":
            return cmd_verify()
        cfg = build_config(args)
        if args.command == "meshgen":
            return cmd_meshgen(cfg, args.out)
        if args.command == "singular":
            return cmd_singular(cfg, args.k, args.out)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "synthesize":
            return cmd_synthesize(cfg, args.theta_samples)
        if args.command == "convergence":
            return cmd_convergence(cfg)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 1
    except (SolverError, ArithmeticError) as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return 2
    except (MeshError, ValueError) as exc:
        print(f"error: invalid-input: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
