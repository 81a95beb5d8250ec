"""Run the HTTP service with uvicorn.

Configuration comes from the environment: MSMKIT_HOST, MSMKIT_PORT, plus
the app's own MSMKIT_UPLOAD_LIMIT / MSMKIT_SESSION_TTL / MSMKIT_TIMEOUT.
"""
import os

import uvicorn

from msmkit.service import create_app


def main() -> None:
    host = os.environ.get("MSMKIT_HOST", "127.0.0.1")
    port = int(os.environ.get("MSMKIT_PORT", "8600"))
    uvicorn.run(create_app(), host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
