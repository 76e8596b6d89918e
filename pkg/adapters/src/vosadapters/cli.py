"""CLI: serve the adapter tools over HTTP (mock mode by default)."""

from __future__ import annotations

import argparse
import sys


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vos-adapters", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)
    p = sub.add_parser("serve", help="start the tool server")
    p.add_argument("--config", default=None, help="JSON adapter config file")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    args = parser.parse_args(argv)

    import uvicorn

    from .server import AdapterConfig, AdapterConfigError, create_app

    try:
        config = AdapterConfig.from_file(args.config) if args.config else AdapterConfig()
        if args.host is not None or args.port is not None:
            from dataclasses import replace

            config = replace(
                config,
                host=args.host if args.host is not None else config.host,
                port=args.port if args.port is not None else config.port,
            )
        app = create_app(config)
    except (AdapterConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    mode = "mock" if config.mock_mode else "relay"
    print(f"serving {len(config.tools)} tools ({mode} mode) on http://{config.host}:{config.port}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
