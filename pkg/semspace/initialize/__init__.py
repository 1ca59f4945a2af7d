from .initializer import Initializer
from .resource_release import ResourceCopier
__all__ = ["Initializer", "ResourceCopier"]
