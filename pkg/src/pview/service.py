"""HTTP read path for a built view.

Three endpoints: GET /schema describes the served view, POST /query answers
one range count with its error bounds, GET /blocks projects the partition
onto two attributes for display. The service only ever touches the view, so
anything it can reveal is already privatized.
"""

from __future__ import annotations

import time

from fastapi import FastAPI, HTTPException
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import DataError
from .view import (
    PView,
    RangeQuery,
    answer,
    blocks_touched,
    error_bounds,
    map_endpoints,
)


class RangeIn(BaseModel):
    lo: int | float | str
    hi: int | float | str


class QueryIn(BaseModel):
    ranges: dict[str, RangeIn]
    mu: float = 0.05
    xi: float = 1.0
    by_value: bool = False


def create_app(view: PView | None, *, cors_origins=("*",)) -> FastAPI:
    app = FastAPI(title="pview", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def _field_errors(request, exc):
        # Field-shape problems are client errors about the request body,
        # not about entity semantics.
        detail = [{"loc": list(e["loc"]), "msg": e["msg"]} for e in exc.errors()]
        return JSONResponse(status_code=400, content={"detail": detail})

    def require_view() -> PView:
        if view is None:
            raise HTTPException(status_code=503, detail="no view loaded")
        return view

    @app.get("/schema")
    def get_schema():
        v = require_view()
        attrs = []
        for a in v.schema.attributes:
            entry = {"name": a.name, "kind": a.kind, "size": a.domain_size}
            if a.kind == "numeric":
                entry["bin_edges"] = list(a.bin_edges)
            else:
                entry["categories"] = list(a.categories)
            attrs.append(entry)
        p = v.params
        return {
            "attributes": attrs,
            "blocks": len(v.blocks),
            "engine_version": v.meta.engine_version,
            "params": {
                "epsilon_r": p.epsilon_r,
                "epsilon_p": p.epsilon_p,
                "theta": p.theta,
                "kappa": p.kappa,
                "epsilon_cut": p.epsilon_cut,
                "lambda": p.lam,
                "delta": p.delta,
            },
        }

    @app.post("/query")
    def post_query(body: QueryIn):
        v = require_view()
        if not 0.0 < body.mu < 1.0:
            raise HTTPException(status_code=400, detail="mu must lie strictly between 0 and 1")
        if not body.xi > 0:
            raise HTTPException(status_code=400, detail="xi must be positive")
        index_ranges: dict[str, tuple[int, int]] = {}
        for name, r in body.ranges.items():
            try:
                spec = v.schema.attribute(name)
            except DataError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from None
            if spec.kind == "numeric" and not body.by_value:
                if not (isinstance(r.lo, int) and isinstance(r.hi, int)):
                    raise HTTPException(
                        status_code=400,
                        detail=f"attribute {name!r}: endpoints must be bin indices (or set by_value)",
                    )
            try:
                lo_i, hi_i = map_endpoints(spec, r.lo, r.hi, by_value=body.by_value)
            except DataError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from None
            if lo_i > hi_i:
                raise HTTPException(status_code=422, detail=f"attribute {name!r}: lo exceeds hi")
            index_ranges[name] = (lo_i, hi_i)
        try:
            query = RangeQuery.from_mapping(v.schema, index_ranges)
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        t0 = time.perf_counter()
        est = answer(v, query)
        eb = error_bounds(v, query, body.mu, xi=body.xi)
        touched = blocks_touched(v, query)
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        return {
            "answer": est,
            "theta_min": eb.theta_min,
            "theta_max": eb.theta_max,
            "mu": body.mu,
            "blocks_touched": touched,
            "elapsed_ms": elapsed_ms,
        }

    @app.get("/blocks")
    def get_blocks(attr_x: str, attr_y: str):
        v = require_view()
        try:
            ax_x = v.schema.axis(attr_x)
            ax_y = v.schema.axis(attr_y)
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        if ax_x == ax_y:
            raise HTTPException(status_code=400, detail="attr_x and attr_y must differ")
        groups: dict[tuple, list] = {}
        for b in v.blocks:
            key = (b.ranges[ax_x], b.ranges[ax_y])
            acc = groups.setdefault(key, [0.0, 0.0, 0])
            acc[0] += b.noisy_sum
            acc[1] += float(b.size)
            acc[2] += 1
        rects = [
            {
                "x": list(key[0]),
                "y": list(key[1]),
                "density": acc[0] / acc[1],
                "blocks": acc[2],
            }
            for key, acc in sorted(groups.items())
        ]
        return {
            "attr_x": attr_x,
            "attr_y": attr_y,
            "x_size": v.schema.attributes[ax_x].domain_size,
            "y_size": v.schema.attributes[ax_y].domain_size,
            "rectangles": rects,
        }

    return app
