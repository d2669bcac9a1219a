import argparse
import sys

from .service import MODES, load_hook, make_server


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lanegen-ref-backend",
        description="Reference generation-backend HTTP service",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8711,
                        help="0 binds an ephemeral port (printed on startup)")
    parser.add_argument("--mode", choices=MODES, default="procedural")
    parser.add_argument("--hook", help="module:callable mounted in diffusion-hook mode")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    hook = load_hook(args.hook) if args.hook else None
    if args.mode == "diffusion-hook" and hook is None:
        parser.error("diffusion-hook mode requires --hook module:callable")

    server = make_server(args.host, args.port, args.mode, hook, quiet=not args.verbose)
    host, port = server.server_address[:2]
    print(f"ref-backend listening on http://{host}:{port} mode={args.mode}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
