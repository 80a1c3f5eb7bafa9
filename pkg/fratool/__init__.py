from flask import Flask

__version__ = '0.1.0'


def create_app(overrides=None):
    app = Flask(__name__, instance_relative_config=True)
    app.config.from_object('config.Config')
    if overrides:
        app.config.update(overrides)

    from .services import commands
    commands.init_app(app)

    return app
