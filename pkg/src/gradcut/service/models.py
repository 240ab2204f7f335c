"""Request and response bodies for the HTTP API."""

from typing import Optional

from pydantic import BaseModel


class HealthResponse(BaseModel):
    status: str
    version: str


class RecoverRequest(BaseModel):
    spec_text: str
    method: Optional[str] = None


class RecoverResponse(BaseModel):
    method: str
    selected: float
    rmse: float
    best_rmse: float
    support: int
    dims: Optional[tuple[int, int]] = None
    path_csv: str
    signal_csv: str
    image_pgm_base64: Optional[str] = None
    output_dir: str


class SimulateRequest(BaseModel):
    spec_text: str


class ResultRowModel(BaseModel):
    signal: str
    method: str
    ratio: float
    sigma: float
    seed: int
    selected: float
    rmse: float
    best_rmse: float
    runtime: float


class SimulateResponse(BaseModel):
    results_csv: str
    rows: list[ResultRowModel]
    metadata: dict
    output_dir: str


class CripCheckRequest(BaseModel):
    spec_text: str


class CripRecordModel(BaseModel):
    s: int
    n_samples: int
    min_ratio: float
    max_ratio: float
    rho_hat: float
    fitted_constant: float
    falsified: Optional[bool] = None


class CripCheckResponse(BaseModel):
    report_csv: str
    records: list[CripRecordModel]
    total_failure: bool
    design: dict


class PhantomRequest(BaseModel):
    name: str
    rows: Optional[int] = None
    cols: Optional[int] = None
    maxval: int = 255


class PhantomResponse(BaseModel):
    name: str
    rows: int
    cols: int
    image_pgm_base64: str
