"""HTTP face of the package: one POST route per CLI subcommand.

The service is stateless and writes no files; clients receive tables and
images as strings and decide where they land on disk.
"""

import base64

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..experiments import (
    ExperimentSpec,
    parse_kv_text,
    recover_cell,
    results_to_csv,
    run_experiment,
)
from ..graphs import lattice_graph, line_graph
from ..isometry import probe_crip
from ..operators import SamplingLaw, fourier_weighted_design, gaussian_design
from ..signals import BUILTIN_PHANTOMS, FormatError, SignalError, graymap_bytes
from ..solver import ConfigError, NumericBlowupError
from ..tables import rows_to_csv
from .models import (
    CripCheckRequest,
    CripCheckResponse,
    CripRecordModel,
    HealthResponse,
    PhantomRequest,
    PhantomResponse,
    RecoverRequest,
    RecoverResponse,
    ResultRowModel,
    SimulateRequest,
    SimulateResponse,
)

app = FastAPI(title="gradcut", version=__version__)

async def _domain_error(request, exc):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


for _exc in (ValueError, SignalError, FormatError, NumericBlowupError):
    app.add_exception_handler(_exc, _domain_error)


@app.get("/v1/health", response_model=HealthResponse)
def health():
    return HealthResponse(status="ok", version=__version__)


@app.post("/v1/recover", response_model=RecoverResponse)
def recover(req: RecoverRequest):
    spec = ExperimentSpec.from_text(req.spec_text)
    result = recover_cell(spec, req.method)
    signal_csv = rows_to_csv(["i", "x"],
                             [(i, float(v)) for i, v in enumerate(result.x_hat)])
    image_b64 = None
    if result.dims is not None:
        img = np.clip(result.x_hat.reshape(result.dims), 0.0, 1.0)
        image_b64 = base64.b64encode(graymap_bytes(img)).decode("ascii")
    return RecoverResponse(method=result.method, selected=float(result.selected),
                           rmse=result.rmse, best_rmse=result.best_rmse,
                           support=result.support, dims=result.dims,
                           path_csv=result.path_csv, signal_csv=signal_csv,
                           image_pgm_base64=image_b64,
                           output_dir=spec.output_dir)


@app.post("/v1/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest):
    spec = ExperimentSpec.from_text(req.spec_text)
    rows, metadata = run_experiment(spec, write_files=False)
    models = [ResultRowModel(signal=r.signal, method=r.method, ratio=r.ratio,
                             sigma=r.sigma, seed=r.seed,
                             selected=float(r.selected), rmse=r.rmse,
                             best_rmse=r.best_rmse, runtime=r.runtime)
              for r in rows]
    # the raw spec value: env-var override is the caller's business
    return SimulateResponse(results_csv=results_to_csv(rows), rows=models,
                            metadata=metadata, output_dir=spec.output_dir)


_CRIP_INT_KEYS = {"p", "rows", "cols", "n", "samples", "seed", "law_c0"}
_CRIP_FLOAT_KEYS = {"kappa", "rho"}
_CRIP_STR_KEYS = {"design", "graph"}


def _parse_crip_spec(text):
    """Flat key = value spec for a probe run; returns a plain dict."""
    out = {"design": "gaussian", "graph": "line", "samples": 50, "seed": 0,
           "law_c0": 10}
    for lineno, key, value in parse_kv_text(text):
        if key == "s":
            out["s"] = [int(v) for v in value.split(",") if v.strip()]
        elif key in _CRIP_INT_KEYS:
            out[key] = int(value)
        elif key in _CRIP_FLOAT_KEYS:
            out[key] = float(value)
        elif key in _CRIP_STR_KEYS:
            out[key] = value
        else:
            raise ConfigError("line %d: unknown key %r" % (lineno, key))
    if "n" not in out or "s" not in out:
        raise ConfigError("probe spec needs both n and s")
    if ("kappa" in out) != ("rho" in out):
        raise ConfigError("kappa and rho must be given together")
    return out


def _probe_operator(params):
    if params["graph"] == "line":
        if "p" not in params:
            raise ConfigError("line graph needs p")
        topology = line_graph(params["p"])
        p_total = params["p"]
        dims = None
    elif params["graph"] == "lattice":
        if "rows" not in params or "cols" not in params:
            raise ConfigError("lattice graph needs rows and cols")
        topology = lattice_graph(params["rows"], params["cols"])
        p_total = params["rows"] * params["cols"]
        dims = (params["rows"], params["cols"])
    else:
        raise ConfigError("unknown graph: %r" % (params["graph"],))
    if params["design"] == "gaussian":
        A = gaussian_design(params["n"], p_total, seed=params["seed"])
    elif params["design"] in ("fourier", "fourier_weighted"):
        if dims is None:
            raise ConfigError("the fourier design needs a lattice graph")
        law = SamplingLaw(dims[0], dims[1], c0=params["law_c0"])
        A = fourier_weighted_design(law, params["n"], seed=params["seed"])
    else:
        raise ConfigError("unknown design: %r" % (params["design"],))
    return A, topology


@app.post("/v1/crip-check", response_model=CripCheckResponse)
def crip_check(req: CripCheckRequest):
    params = _parse_crip_spec(req.spec_text)
    A, topology = _probe_operator(params)
    report = probe_crip(A, topology, params["s"],
                        samples_per_s=params["samples"], seed=params["seed"])
    fitted = report.fitted_constants(params["n"], topology.n_edges)
    flags = (report.falsifies(params["kappa"], params["rho"])
             if "kappa" in params else [None] * len(report.records))
    records = [CripRecordModel(s=r.s, n_samples=r.n_samples,
                               min_ratio=r.min_ratio, max_ratio=r.max_ratio,
                               rho_hat=r.rho_hat, fitted_constant=c,
                               falsified=f)
               for r, c, f in zip(report.records, fitted, flags)]
    return CripCheckResponse(report_csv=report.to_csv(), records=records,
                             total_failure=report.total_failure,
                             design=report.design_info)


@app.post("/v1/phantom-gen", response_model=PhantomResponse)
def phantom_gen(req: PhantomRequest):
    if req.name not in BUILTIN_PHANTOMS:
        raise ConfigError("unknown phantom %r; built-ins: %s"
                          % (req.name, ", ".join(sorted(BUILTIN_PHANTOMS))))
    maker = BUILTIN_PHANTOMS[req.name]
    if req.rows is not None or req.cols is not None:
        img = maker(req.rows or 32, req.cols or 32)
    else:
        img = maker()
    return PhantomResponse(name=req.name, rows=img.shape[0], cols=img.shape[1],
                           image_pgm_base64=base64.b64encode(
                               graymap_bytes(img, req.maxval)).decode("ascii"))
