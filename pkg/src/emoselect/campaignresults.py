"""
Messages and progress collected while a command runs.

Library code reports through a CampaignResultsBuilder; the command line prints
the built CampaignResults once the command is done.
"""

import logging
import uuid
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cache
from time import perf_counter_ns
from types import TracebackType
from typing import Optional, Self

from emoselect.exceptions import EarlyAbortException
from emoselect.stringutil import format_time_ns

L = logging.getLogger(__name__)


class Severity(StrEnum):
    ERROR = "Error"
    WARNING = "Warning"
    INFO = "Info"

    @classmethod
    def all(cls) -> set[Self]:
        return set(cls)

    @classmethod
    @cache
    def width(cls) -> int:
        return max(len(s.value) for s in cls)


class MessageType(StrEnum):
    DevInfo = "Dev Info"
    Configuration = "Configuration"
    Run = "Run"
    Aggregation = "Aggregation"
    Check = "Check"
    Progress = "Progress Status"

    @classmethod
    def all(cls) -> set[Self]:
        return set(cls)

    @classmethod
    def allExcept(cls, *excluded: Self) -> set[Self]:
        return cls.all().difference(excluded)

    @classmethod
    @cache
    def width(cls) -> int:
        return max(len(t.value) for t in cls)


USER_TYPES = MessageType.allExcept(MessageType.DevInfo, MessageType.Progress)


@dataclass(slots=True, frozen=True)
class Message:
    messageText: str
    severity: Severity
    messageType: MessageType
    algorithm: Optional[str] = None
    cellId: Optional[str] = None

    def __str__(self) -> str:
        text = (
            f"{self.severity.value:{Severity.width()}s} : "
            f"{self.messageType.value:{MessageType.width()}s} : {self.messageText}"
        )
        if self.algorithm is not None:
            text += f" (algorithm: {self.algorithm})"
        if self.cellId is not None:
            text += f" (cell: {self.cellId})"
        return text


class _MessageQueries:
    messages: Sequence[Message]

    def getMessages(
        self,
        *,
        wantedMessageTypes: Optional[set[MessageType]] = None,
        wantedMessageSeverities: Optional[set[Severity]] = None,
    ) -> list[Message]:
        return [
            m
            for m in self.messages
            if (wantedMessageTypes is None or m.messageType in wantedMessageTypes)
            and (wantedMessageSeverities is None or m.severity in wantedMessageSeverities)
        ]

    @property
    def developerMessages(self) -> list[Message]:
        return list(self.messages)

    @property
    def userMessages(self) -> list[Message]:
        return self.getMessages(wantedMessageTypes=USER_TYPES)

    def hasMessages(self, userOnly: bool = False) -> bool:
        return bool(self.userMessages if userOnly else self.messages)

    def hasErrors(self) -> bool:
        return any(m.severity is Severity.ERROR for m in self.userMessages)

    @property
    def successful(self) -> bool:
        return not self.hasErrors()


@dataclass(slots=True, frozen=True)
class CampaignResults(_MessageQueries):
    campaignId: str
    messages: tuple[Message, ...]
    cellsTotal: int = 0
    cellsRun: int = 0
    cellsSkipped: int = 0
    aborted: bool = False

    def __len__(self) -> int:
        return len(self.messages)


@dataclass
class CampaignResultsBuilder(_MessageQueries):
    """Accumulates messages and cell counts. A cell id reported twice counts once."""

    campaignId: str = field(default_factory=lambda: str(uuid.uuid4()))
    consoleOutput: bool = False
    messages: list[Message] = field(default_factory=list)
    cellsTotal: int = 0
    aborted: bool = False
    _run: set[str] = field(default_factory=set)
    _skipped: set[str] = field(default_factory=set)

    @property
    def cellsRun(self) -> int:
        return len(self._run)

    @property
    def cellsSkipped(self) -> int:
        return len(self._skipped)

    def addCellsTotal(self, count: int) -> None:
        self.cellsTotal += count

    def addCellRun(self, cellId: str) -> None:
        self._run.add(cellId)

    def addCellSkipped(self, cellId: str) -> None:
        self._skipped.add(cellId)

    def addMessage(
        self,
        message_text: str,
        severity: Severity,
        message_type: MessageType,
        *,
        algorithm: Optional[str] = None,
        cell_id: Optional[str] = None,
    ) -> None:
        self.messages.append(Message(message_text, severity, message_type, algorithm, cell_id))

    def processingContext(self, name: str) -> "ProcessingContext":
        return ProcessingContext(self, name)

    def build(self) -> CampaignResults:
        return CampaignResults(
            self.campaignId,
            tuple(self.messages),
            self.cellsTotal,
            self.cellsRun,
            self.cellsSkipped,
            self.aborted,
        )


class ProcessingContext:
    """Times a named command and its sections. EarlyAbortException ends the
    command without a traceback and marks the results as aborted; any other
    exception propagates."""

    def __init__(self, resultsBuilder: CampaignResultsBuilder, name: str) -> None:
        self._builder = resultsBuilder
        self.name = name
        self.succeeded = False
        self._started = 0
        self._section: Optional[tuple[str, int]] = None

    def __enter__(self) -> Self:
        self._started = perf_counter_ns()
        self._progress(f'Starting: "{self.name}".')
        return self

    def __exit__(
        self,
        exc_type: Optional[type[BaseException]],
        exc_value: Optional[BaseException],
        traceback: Optional[TracebackType],
    ) -> bool:
        self.mark()
        took = format_time_ns(perf_counter_ns() - self._started)
        self.succeeded = exc_type is None
        if exc_type is None:
            self._progress(f'Finished: "{self.name}" in {took}.')
            return False
        if issubclass(exc_type, EarlyAbortException):
            self._builder.aborted = True
            self._builder.addMessage(
                f'Processing of "{self.name}" aborted after {took}: {exc_value}',
                Severity.ERROR,
                MessageType.Run,
            )
            return True
        self._progress(f'Processing of "{self.name}" finished abnormally after {took}.', Severity.ERROR)
        return False

    def _progress(self, message: str, severity: Severity = Severity.INFO) -> None:
        self._builder.addMessage(message, severity, MessageType.Progress)
        if self._builder.consoleOutput:
            L.info(message)

    def addDevInfoMessage(self, message: str) -> None:
        self._builder.addMessage(message, Severity.INFO, MessageType.DevInfo)

    def mark(self, newSectionName: Optional[str] = None, additionalInfo: str = "") -> None:
        """Close the open section, if any, and open ``newSectionName``."""
        now = perf_counter_ns()
        if self._section is not None:
            name, started = self._section
            self._progress(f"Finished: [{name}] in {format_time_ns(now - started)}.")
            self._section = None
        if newSectionName is not None:
            self._section = (newSectionName, now)
            self._progress(f"Starting: [{newSectionName}]. {additionalInfo}".rstrip())
