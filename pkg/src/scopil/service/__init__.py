from .app import DemoWriter, create_app
from .session import Phase, Session, geometry_payload

__all__ = ["DemoWriter", "create_app", "Phase", "Session", "geometry_payload"]
