"""
Vacuum NS Solver - API FastAPI
Point d'entrée du service de calcul local.
"""

import logging
import threading
import time
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import BackgroundTasks, FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from src.config import get_settings
from src.exceptions import ConfigurationError
from src.models import RunConfig, RunResponse
from src.pipeline.config_loader import config_digest, config_from_mapping, config_from_text
from src.pipeline.orchestrator import get_orchestrator
from src.utils.logging import configure_logging

configure_logging(get_settings().log_level)
logger = logging.getLogger(__name__)

# Cache d'idempotence des calculs terminés
# Structure: {run_id: (timestamp, result)}
COMPLETED_RUNS_CACHE: dict[str, tuple[float, dict]] = {}
CACHE_EXPIRY_SECONDS = 3600

# Calculs en cours : {run_id: timestamp_start}
RUNNING_CACHE: dict[str, float] = {}
RUNNING_TIMEOUT_SECONDS = 1800

# Un seul calcul à la fois : les tâches de fond attendent leur tour
RUN_LOCK = threading.Lock()


def cleanup_expired_cache():
    """Nettoie les entrées expirées des deux caches."""
    current_time = time.time()

    expired = [key for key, (timestamp, _) in COMPLETED_RUNS_CACHE.items() if current_time - timestamp > CACHE_EXPIRY_SECONDS]
    for key in expired:
        del COMPLETED_RUNS_CACHE[key]

    stalled = [key for key, timestamp in RUNNING_CACHE.items() if current_time - timestamp > RUNNING_TIMEOUT_SECONDS]
    for key in stalled:
        logger.warning(f"⚠️ Calcul {key} en cours depuis trop longtemps, suppression du cache")
        del RUNNING_CACHE[key]


def mark_run_as_running(run_id: str):
    RUNNING_CACHE[run_id] = time.time()
    logger.info(f"🔄 Calcul {run_id} marqué EN COURS")


def mark_run_as_completed(run_id: str, result: dict):
    """Retire le calcul des calculs en cours et conserve son résultat."""
    RUNNING_CACHE.pop(run_id, None)
    COMPLETED_RUNS_CACHE[run_id] = (time.time(), result)
    logger.info(f"✅ Calcul {run_id} ajouté au cache d'idempotence")


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Gestion du cycle de vie de l'application."""
    logger.info("🚀 Vacuum NS Solver démarré")
    settings = get_settings()
    logger.info(f"   Environnement: {settings.app_env}")
    logger.info(f"   Threads solveur: {settings.solver_threads}")
    yield
    logger.info("👋 Vacuum NS Solver arrêté")


app = FastAPI(
    title="Vacuum NS Solver",
    description="Solveur lagrangien spectral de Navier–Stokes compressible à frontière libre avec vide",
    version="0.1.0",
    lifespan=lifespan,
)


async def read_config(request: Request) -> RunConfig:
    """
    Configuration depuis le corps de la requête : texte `clé = valeur`
    ou objet JSON de clés pointées.

    Raises:
        HTTPException: 422 si la configuration est invalide
    """
    try:
        if request.headers.get("content-type", "").startswith("application/json"):
            payload = await request.json()
            if not isinstance(payload, dict):
                raise HTTPException(status_code=422, detail="objet JSON de clés pointées attendu")
            return config_from_mapping(payload)
        body = await request.body()
        return config_from_text(body.decode("utf-8"))
    except ConfigurationError as e:
        logger.error(f"Configuration invalide: {e}")
        raise HTTPException(status_code=422, detail=str(e))
    except (UnicodeDecodeError, ValueError) as e:
        raise HTTPException(status_code=422, detail=f"Corps illisible: {e}")


@app.get("/")
@app.head("/")
async def root() -> dict[str, str]:
    """Endpoint racine, GET et HEAD pour les sondes de disponibilité."""
    return {"status": "healthy", "service": "vacuum-ns-solver", "docs": "/docs"}


@app.get("/health")
@app.head("/health")
async def health_check() -> dict[str, str]:
    return {"status": "healthy", "service": "vacuum-ns-solver"}


@app.get("/cache/status")
async def cache_status() -> dict:
    """Contenu du cache d'idempotence (debug)."""
    cleanup_expired_cache()
    return {
        "completed_runs_count": len(COMPLETED_RUNS_CACHE),
        "completed_runs": list(COMPLETED_RUNS_CACHE.keys()),
        "running": list(RUNNING_CACHE.keys()),
        "cache_expiry_seconds": CACHE_EXPIRY_SECONDS,
    }


@app.post("/verify", response_model=RunResponse)
async def verify(request: Request) -> RunResponse:
    """Exécute la suite de vérification de façon synchrone."""
    cfg = await read_config(request)
    result = get_orchestrator().verify(cfg)
    return RunResponse(
        success=result.success,
        message=result.message,
        exit_code=result.exit_code,
        data=result.data,
    )


# =============================================================================
# CALCULS EN ARRIÈRE-PLAN
# =============================================================================

def run_background(run_id: str, cfg: RunConfig):
    """
    Exécute un calcul après la réponse HTTP, un seul à la fois (RUN_LOCK).

    Args:
        run_id: Empreinte de la configuration
        cfg: Configuration validée
    """
    logger.info(f"🏭 [BACKGROUND] Début calcul {run_id}")
    try:
        out = Path(get_settings().output_dir) / run_id[:12]
        with RUN_LOCK:
            result = get_orchestrator().run(cfg, out)
        mark_run_as_completed(
            run_id,
            {
                "success": result.success,
                "message": result.message,
                "run_id": run_id,
                "exit_code": result.exit_code,
                "data": {"files": result.files, "processing_time_ms": result.processing_time_ms, **(result.data or {})},
            },
        )
        if result.success:
            logger.info(f"🎉 [BACKGROUND] Calcul {run_id} terminé")
        else:
            logger.error(f"❌ [BACKGROUND] Échec calcul {run_id}: {result.message}")
    except Exception as e:
        logger.exception(f"❌ [BACKGROUND] Erreur critique lors du calcul: {e}")
        RUNNING_CACHE.pop(run_id, None)


@app.post("/runs", response_model=RunResponse)
async def submit_run(request: Request, background_tasks: BackgroundTasks) -> RunResponse:
    """
    Planifie un calcul et répond immédiatement avec son identifiant.
    Une configuration déjà calculée renvoie le résultat en cache.
    """
    cfg = await read_config(request)
    run_id = config_digest(cfg)
    cleanup_expired_cache()

    if run_id in COMPLETED_RUNS_CACHE:
        logger.info(f"🔄 Calcul {run_id} déjà terminé, retour du cache")
        return RunResponse(**COMPLETED_RUNS_CACHE[run_id][1])
    if run_id in RUNNING_CACHE:
        logger.info(f"⏳ Calcul {run_id} déjà en cours")
        return RunResponse(success=True, message="Calcul déjà en cours", run_id=run_id)

    mark_run_as_running(run_id)
    background_tasks.add_task(run_background, run_id, cfg)
    return RunResponse(success=True, message=f"Calcul {run_id[:12]} accepté, traitement en cours", run_id=run_id)


@app.get("/runs/{run_id}", response_model=RunResponse)
async def run_status(run_id: str) -> RunResponse:
    cleanup_expired_cache()
    if run_id in COMPLETED_RUNS_CACHE:
        return RunResponse(**COMPLETED_RUNS_CACHE[run_id][1])
    if run_id in RUNNING_CACHE:
        return RunResponse(success=True, message="Calcul en cours", run_id=run_id)
    raise HTTPException(status_code=404, detail=f"Calcul {run_id} inconnu")


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception) -> JSONResponse:
    """Gestionnaire global des exceptions."""
    logger.exception(f"Erreur non gérée: {exc}")
    return JSONResponse(status_code=500, content={"detail": "Une erreur interne s'est produite"})


if __name__ == "__main__":
    import uvicorn

    uvicorn.run("main:app", host="0.0.0.0", port=8000, reload=True)
