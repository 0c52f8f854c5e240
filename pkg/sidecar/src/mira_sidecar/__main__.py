import argparse

import uvicorn

from .app import create_app
from .config import SidecarConfig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mira-sidecar")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--host")
    parser.add_argument("--port", type=int)
    parser.add_argument("--embedding-model", dest="embedding_model")
    parser.add_argument("--srl-model", dest="srl_model")
    parser.add_argument("--max-batch", dest="max_batch", type=int)
    args = parser.parse_args(argv)

    config = SidecarConfig.from_file(args.config) if args.config else SidecarConfig()
    for field in ("host", "port", "embedding_model", "srl_model", "max_batch"):
        value = getattr(args, field)
        if value is not None:
            setattr(config, field, value)

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
