from fastapi import APIRouter

from config.constants import VERSION

router = APIRouter()

@router.get("/health")
def health():
    return {"ok": True, "format_version": VERSION}
