import argparse
import logging
import os
import sys
from pathlib import Path
from typing import NoReturn, Optional, Sequence

import numpy as np
import pandas as pd
import rich.traceback
from dotenv import load_dotenv
from rich.logging import RichHandler

from emoselect import __version__
from emoselect.campaign import Campaign, aggregate_ecdf, diagnostics, load_campaign_config
from emoselect.campaignresults import CampaignResults, CampaignResultsBuilder
from emoselect.core import RandomSource
from emoselect.exceptions import (
    ConfigurationException,
    EarlyAbortException,
    EmoSelectException,
)
from emoselect.plotting import ScatterPanel, scatter_figure, simplex_outline
from emoselect.variation import (
    CrossoverConfig,
    CrossoverMethod,
    blx_alpha,
    pcx,
    rex,
    sbx_batch,
    spx,
)

L = logging.getLogger(__name__)

PROG = "emoselect"
DEFAULT_OUT = "results"
SCATTER_CHILDREN = 1000
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_KNOWN = 2


def _envInt(name: str) -> Optional[int]:
    value = os.environ.get(name)
    if value is None or value == "":
        return None
    try:
        return int(value)
    except ValueError:
        raise ConfigurationException(f"{value!r} is not an integer", key=name) from None


class ArgParser(argparse.ArgumentParser):
    """Usage errors leave as one machine-readable line, like every other error."""

    def error(self, message: str) -> NoReturn:
        self.exit(EXIT_KNOWN, f"{PROG}: error: {ConfigurationException.code}: {message}\n")


def createArgParser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--out",
        type=Path,
        default=None,
        help=f"Output directory (default: $EMOSELECT_OUT or ./{DEFAULT_OUT}).",
    )
    common.add_argument(
        "--devinfo",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="Enable display of developer information messages (not normally visible to users)",
    )
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")

    campaign = argparse.ArgumentParser(add_help=False)
    campaign.add_argument("--config", type=Path, required=True, help="Campaign TOML file.")
    campaign.add_argument(
        "--force",
        action="store_true",
        help="Recompute outputs that already exist.",
    )
    campaign.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Parallel worker processes (default: $EMOSELECT_WORKERS or the config value).",
    )

    parser = ArgParser(
        prog=PROG,
        description="Simple EMOA with BA/BF/BC environmental selections and a COCO-style benchmark harness.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common, campaign], help="Execute a campaign grid.")
    run.add_argument("--seed-base", type=int, default=None, help="First seed of the seed range.")

    sub.add_parser(
        "reference",
        parents=[common, campaign],
        help="Generate the reference-value file for the campaign's problems.",
    )

    ecdf = sub.add_parser("ecdf", parents=[common], help="Aggregate runtime ECDFs of a campaign.")
    ecdf.add_argument(
        "--group",
        default="dimension",
        help="dimension (one output per n), all, or problem=<id> (default: dimension).",
    )
    ecdf.add_argument("--algorithms", nargs="+", default=None, help="Subset of algorithm labels.")

    sub.add_parser(
        "diagnostics",
        parents=[common],
        help="Population indicator and replacement traces plus monotonicity checks.",
    )

    scatter = sub.add_parser("scatter", parents=[common], help="Scatter children of 2-d parents.")
    scatter.add_argument("--parents", type=Path, required=True, help="CSV with columns x1,x2.")
    scatter.add_argument(
        "--operator",
        default="all",
        choices=["all", *(m.value for m in CrossoverMethod)],
        help="Crossover to draw (default: all five, one panel each).",
    )
    scatter.add_argument("--seed", type=int, default=1)
    return parser


def parseArgs(parser: argparse.ArgumentParser, argv: Optional[Sequence[str]]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.out is None:
        args.out = Path(os.environ.get("EMOSELECT_OUT") or DEFAULT_OUT)
    if getattr(args, "workers", None) is None and "workers" in args:
        args.workers = _envInt("EMOSELECT_WORKERS")
    if getattr(args, "workers", None) is not None and args.workers < 1:
        parser.error("--workers must be at least 1")
    return args


def doRun(args: argparse.Namespace, builder: CampaignResultsBuilder) -> None:
    config = load_campaign_config(args.config)
    with builder.processingContext(f"Campaign {config.name}") as pc:
        campaign = Campaign(config, args.out, seed_base=args.seed_base, workers=args.workers)
        pc.addDevInfoMessage(
            f"{len(campaign.algorithms)} algorithms x {len(campaign.suite)} problems x {len(campaign.seeds)} seeds"
        )
        pc.mark("Running grid cells")
        manifest_hash = campaign.run(builder, force=args.force)
        pc.addDevInfoMessage(f"Manifest hash {manifest_hash}")


def doReference(args: argparse.Namespace, builder: CampaignResultsBuilder) -> None:
    config = load_campaign_config(args.config)
    with builder.processingContext(f"Reference values for {config.name}") as pc:
        campaign = Campaign(config, args.out, workers=args.workers)
        pc.mark("Running reference campaign")
        campaign.run_reference(builder, force=args.force)


def doEcdf(args: argparse.Namespace, builder: CampaignResultsBuilder) -> None:
    with builder.processingContext("ECDF aggregation") as pc:
        for path in aggregate_ecdf(args.out, args.group, args.algorithms):
            pc.addDevInfoMessage(f"Wrote {path}")


def doDiagnostics(args: argparse.Namespace, builder: CampaignResultsBuilder) -> None:
    with builder.processingContext("Diagnostics") as pc:
        for path in diagnostics(args.out, builder):
            pc.addDevInfoMessage(f"Wrote {path}")


def scatterPanels(parents: np.ndarray, operator: str, seed: int) -> list[ScatterPanel]:
    if parents.ndim != 2 or parents.shape[1] != 2:
        raise ConfigurationException(
            f"Scatter plots need 2-d parents, got {parents.shape[-1]} columns", key="--parents"
        )
    if parents.shape[0] < 2:
        raise ConfigurationException("At least two parents are needed", key="--parents")
    methods = list(CrossoverMethod) if operator == "all" else [CrossoverMethod(operator)]
    k = parents.shape[0]
    panels = []
    for method in methods:
        rng = RandomSource(seed)
        if method.is_two_parent:
            cfg = CrossoverConfig.forDimension(method, 2)
            used = parents[:2]
            if method is CrossoverMethod.SBX:
                c1, c2 = sbx_batch(used[0], used[1], cfg, rng, SCATTER_CHILDREN // 2)
                children = np.vstack([c1, c2])
            else:
                children = blx_alpha(used[0], used[1], cfg, rng, size=SCATTER_CHILDREN)
            panels.append(ScatterPanel(method.value, used, children))
            continue
        cfg = CrossoverConfig.forDimension(method, 2, k=k)
        outline = None
        match method:
            case CrossoverMethod.PCX:
                children = np.vstack(
                    [
                        pcx(parents, i % k, cfg, rng, size=1)
                        for i in range(SCATTER_CHILDREN)
                    ]
                )
            case CrossoverMethod.SPX:
                children = spx(parents, cfg, rng, size=SCATTER_CHILDREN)
                assert cfg.epsilon is not None
                outline = simplex_outline(parents, cfg.epsilon)
            case _:
                children = rex(parents, cfg, rng, size=SCATTER_CHILDREN)
        panels.append(ScatterPanel(method.value, parents, children, outline))
    return panels


def doScatter(args: argparse.Namespace, builder: CampaignResultsBuilder) -> None:
    with builder.processingContext("Crossover scatter") as pc:
        if not args.parents.is_file():
            raise ConfigurationException(f"{args.parents} not found", key="--parents")
        frame = pd.read_csv(args.parents)
        columns = [c for c in frame.columns if c.startswith("x")]
        panels = scatterPanels(frame[columns].to_numpy(dtype=np.float64), args.operator, args.seed)
        artifact = scatter_figure(
            panels,
            f"scatter-{args.operator}.svg",
            f"{SCATTER_CHILDREN} children per operator, seed {args.seed}",
        )
        pc.addDevInfoMessage(f"Wrote {artifact.saveToDirectory(args.out)} {artifact}")


COMMANDS = {
    "run": doRun,
    "reference": doReference,
    "ecdf": doEcdf,
    "diagnostics": doDiagnostics,
    "scatter": doScatter,
}


def outputMessages(args: argparse.Namespace, result: CampaignResults) -> None:
    hasMessages = result.hasMessages(userOnly=True)
    messages = result.userMessages
    if args.devinfo:
        hasMessages = result.hasMessages()
        messages = result.developerMessages

    if hasMessages:
        print()
        print(f"Information and issues encountered ({len(messages)} messages):")
        for message in messages:
            print(f"\t{message}")
    if result.cellsTotal:
        print(
            f"Cells: {result.cellsTotal} total, {result.cellsRun} run, {result.cellsSkipped} skipped"
        )


def configureLogging(verbose: bool) -> None:
    rich.traceback.install(show_locals=False)
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%Y-%m-%d %H:%M:%S]",
        handlers=[RichHandler(rich_tracebacks=True)],
        force=True,
    )
    logging.captureWarnings(True)


def error(code: str, message: str) -> None:
    print(f"{PROG}: error: {code}: {message}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    parser = createArgParser()
    try:
        args = parseArgs(parser, argv)
    except EmoSelectException as e:
        error(e.code, str(e))
        return EXIT_KNOWN
    configureLogging(args.verbose)

    builder = CampaignResultsBuilder(consoleOutput=False)
    try:
        COMMANDS[args.command](args, builder)
    except EmoSelectException as e:
        error(e.code, str(e))
        return EXIT_KNOWN
    except Exception as e:
        L.exception("Unexpected failure", exc_info=e)
        error("E_INTERNAL", f"{type(e).__name__}: {e}")
        return EXIT_UNEXPECTED

    result = builder.build()
    outputMessages(args, result)
    if result.hasErrors():
        if result.aborted:
            error(EarlyAbortException.code, "the command was aborted, see the messages above")
        else:
            error("E_CHECK", "errors were reported, see the messages above")
        return EXIT_KNOWN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
