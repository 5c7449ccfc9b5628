# backend/api/main.py

from contextlib import asynccontextmanager
from fastapi import FastAPI
from backend.api import sweeps
from backend.config import Config

@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan events"""
    # Startup: validate configuration
    try:
        Config.validate_config()
        print(f"✅ Output directory: {Config.OUTPUT_DIR}")
        print(f"✅ Monte-Carlo defaults: {Config.SAMPLES} samples, seed {Config.SEED}, {Config.WORKERS} worker(s)")
    except ValueError as e:
        print(f"❌ Configuration error: {e}")
        print(f"💡 Please check your MMFSO_* environment variables")
        raise

    yield

    print("🔄 Backend shutting down...")

app = FastAPI(
    title="mmfso Backend API",
    description="Sweep service for the mmWave uplink with FSO backhaul",
    version="1.0.0",
    lifespan=lifespan
)

app.include_router(sweeps.router, prefix="/api")

# Health check endpoint
@app.get("/health")
def health_check():
    """Health check endpoint"""
    return {"status": "healthy", "message": "mmfso Backend API is running"}

# To run the app, use:
# uvicorn backend.api.main:app --reload
