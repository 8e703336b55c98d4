"""Command line entry point."""

import sys

import click

from .config import SidecarConfig
from .service import create_app


@click.command()
@click.option("--model", default=None, help="Sentence-transformers model id, or 'local-hash'.")
@click.option("--host", default=None, help="Bind address.")
@click.option("--port", default=None, type=int, help="Bind port.")
@click.option("--batch-size", default=None, type=int, help="Max texts per inference batch.")
def serve(model, host, port, batch_size):
    """Run the embedding service."""
    overrides = {
        key: value
        for key, value in {
            "model_name": model,
            "host": host,
            "port": port,
            "batch_size": batch_size,
        }.items()
        if value is not None
    }
    try:
        config = SidecarConfig(**overrides)
    except ValueError as err:
        raise click.BadParameter(str(err)) from err
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port)


def main(argv=None):
    try:
        serve.main(args=argv, standalone_mode=False)
    except click.UsageError as err:
        err.show()
        return 1
    except click.ClickException as err:
        err.show()
        return 2
    except click.exceptions.Abort:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
