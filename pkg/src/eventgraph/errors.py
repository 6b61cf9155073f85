"""Exception hierarchy shared by all eventgraph modules."""


class EventGraphError(Exception):
    """Base class of every error raised by this package."""


# graph core


class GraphError(EventGraphError):
    pass


class FrozenGraph(GraphError):
    def __init__(self):
        super().__init__("graph is frozen; no further insertions allowed")


class MissingRequiredProperty(GraphError):
    def __init__(self, kind, name):
        super().__init__(f"{kind} node requires property {name!r}")
        self.kind = kind
        self.name = name


class TypeMismatch(GraphError):
    def __init__(self, name, value, expected=None):
        msg = f"property {name!r} has unsupported value {value!r}"
        if expected:
            msg += f" (expected {expected})"
        super().__init__(msg)
        self.name = name


class UnknownNode(GraphError):
    def __init__(self, node_id):
        super().__init__(f"unknown node id {node_id!r}")
        self.node_id = node_id


class EndpointKindViolation(GraphError):
    def __init__(self, edge_kind, src_kind, dst_kind):
        super().__init__(
            f"{edge_kind} edge cannot connect {src_kind} -> {dst_kind}"
        )


class DuplicateNode(GraphError):
    def __init__(self, kind, key):
        super().__init__(f"{kind} node {key!r} already exists")
        self.key = key


# ingestion


class LogFormatError(EventGraphError):
    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class HeaderMismatch(LogFormatError):
    pass


class BadTimestamp(LogFormatError):
    pass


class NoEntities(LogFormatError):
    pass


class RaggedRow(LogFormatError):
    pass


class EmptyActivity(LogFormatError):
    pass


class SchemaError(EventGraphError):
    pass


# relational extraction


class BundleError(EventGraphError):
    pass


class MissingTable(BundleError):
    pass


class MissingColumn(BundleError):
    pass


class UnresolvedAdmission(BundleError):
    pass


class MissingAdmitTime(BundleError):
    def __init__(self, hadm_id):
        super().__init__(f"admission {hadm_id} has no admit time")
        self.hadm_id = hadm_id


# construction and discovery


class BuildError(EventGraphError):
    pass


class EmptyLog(BuildError):
    def __init__(self):
        super().__init__("cannot build an event graph from an empty log")


class UncorrelatedEvent(BuildError):
    pass


class DfgError(EventGraphError):
    pass


class UnknownEntityType(DfgError):
    pass


class UnknownCase(DfgError):
    pass


class InstanceLevelNotFilterable(DfgError):
    def __init__(self):
        super().__init__("frequency filtering applies to class-level views only")


# serialization


class ExportError(EventGraphError):
    pass


class MissingColor(ExportError):
    def __init__(self, entity_type):
        super().__init__(f"palette has no color for {entity_type!r}")
        self.entity_type = entity_type


class MalformedDump(ExportError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at {position})"
        super().__init__(message)
        self.position = position


class BadRate(EventGraphError):
    pass
