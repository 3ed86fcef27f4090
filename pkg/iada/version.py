__version__ = "0.2.0"
__version_comment__ = "recent changes: add sub-domain sweep and source distribution modelling"
