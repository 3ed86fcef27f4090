# !/usr/bin/python3
from argparse import ArgumentParser
import importlib
import logging
import os
from sys import exit

from .version import __version__, __version_comment__  # noqa: F401

log = logging.getLogger("IADA")
# logging (DEBUG, INFO, WARNING, ERROR, CRITICAL)
# set default log level
log.setLevel(logging.WARNING)
logging.basicConfig()

SOURCE_CHECKPOINT = "source.ckpt"
SDM_CHECKPOINT = "source_sdm.ckpt"
DEFAULT_OUTPUTS = "screen,text,jsonfile,plot"


def get_outputs(output_list):
    """
    Take a comma separated list of output names
    attempt to find and instantiate the corresponding module
    return array of modules
    """
    from .exceptions import InvalidArgumentError

    ops = []
    outputs = [o.strip() for o in output_list.split(",") if o.strip()]
    for output in outputs:
        log.info(f"attempting to create output processor: {output}")
        try:
            output_module = importlib.import_module("iada.outputs." + output, ".")
        except ModuleNotFoundError as e:
            log.critical(f"No module found for output processor {output}")
            raise InvalidArgumentError(f"unknown output processor {output}") from e
        output_class = getattr(output_module, output)
        ops.append(output_class())
    return ops


def send_outputs(payload, tag, config):
    for op in get_outputs(config.outputs):
        op.output(data=payload, tag=tag, report_dir=config.report_dir)


def build_parser():
    description = f"Incremental Adversarial Domain Adaptation Utility, version: {__version__}, {__version_comment__}"
    parser = ArgumentParser(description=description)
    parser.add_argument(
        "-C",
        "--configfile",
        type=str,
        help="Full location of config file",
        default=None,
    )
    parser.add_argument("--seed", type=int, help="Override the root seed of the run", default=None)
    parser.add_argument(
        "--datadir",
        type=str,
        help="Directory holding the idx digit archives, or 'test' for synthetic digits",
        default=None,
    )
    parser.add_argument("--device", type=str, help="Torch device to train on (default: cpu)", default=None)
    parser.add_argument(
        "-o",
        "--output",
        type=str,
        help=f"Specifies the output processor(s) to use [comma separated if multiple] ({DEFAULT_OUTPUTS} [default])",
        default=None,
    )
    parser.add_argument("-v", "--version", action="store_true", help="Display the version")
    parser.add_argument(
        "-D",
        "--debug",
        action="store_true",
        help="Enable Debug and above (i.e. all) messages",
    )
    parser.add_argument("-I", "--info", action="store_true", help="Enable Info and above level messages")

    commands = parser.add_subparsers(dest="command", metavar="command")

    generate = commands.add_parser("generate-domains", help="Realize and cache a drifting domain sequence")
    generate.add_argument("--start", type=float, help="Compression factor of the first domain")
    generate.add_argument("--end", type=float, help="Compression factor of the final domain")
    generate.add_argument("--count", type=int, help="Number of domains")
    generate.add_argument("--out", type=str, help="Directory for the domain cache files", default="domains")

    source = commands.add_parser("train-source", help="Train source encoder and classifier head")
    source.add_argument("--epochs", type=int, help="Source training epochs")

    gan = commands.add_parser("train-sdm-gan", help="Fit the feature generator to the source distribution")
    gan.add_argument("--steps", type=int, help="Generator training steps")

    adapt = commands.add_parser("adapt", help="Adapt the target encoder along a domain sequence")
    adapt.add_argument("--mode", type=str, choices=["ada", "ada-union", "iada"], help="Adaptation regime")
    adapt.add_argument("--sdm", action="store_true", help="Use source distribution modelling (no source data)")
    adapt.add_argument("--start", type=float, help="Compression factor of the first domain")
    adapt.add_argument("--end", type=float, help="Compression factor of the final domain")
    adapt.add_argument("--count", type=int, help="Number of domains")
    adapt.add_argument("--steps", type=int, help="Total adversarial steps (split over the domains)")

    evaluate = commands.add_parser("evaluate", help="Accuracy of a checkpoint on a deformed test domain")
    evaluate.add_argument("--checkpoint", type=str, help="Bundle checkpoint (default: source checkpoint)")
    evaluate.add_argument("--factor", type=float, help="Compression factor of the test domain (default: end factor)")
    evaluate.add_argument("--source-encoder", action="store_true", help="Evaluate E_s instead of E_t")

    commands.add_parser("run-table1", help="Run the mode comparison over all configured cells and seeds")
    commands.add_parser("run-sweep", help="Run the sub-domain count sweep under an equal total budget")
    commands.add_parser("report", help="Render tables and plots from saved run records")
    return parser, description


def load_run_config(args):
    from .config import RunConfig, load_config

    config = load_config(args.configfile) if args.configfile else RunConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.datadir is not None:
        overrides["data_dir"] = args.datadir
    if args.device is not None:
        overrides["device"] = args.device
    if args.output is not None:
        overrides["outputs"] = args.output
    for name, key in (("start", "start_factor"), ("end", "end_factor"), ("count", "count"), ("steps", "steps_total")):
        if getattr(args, name, None) is not None and args.command != "train-sdm-gan":
            overrides[key] = getattr(args, name)
    if args.command == "train-sdm-gan" and args.steps is not None:
        overrides["gan_steps"] = args.steps
    if getattr(args, "epochs", None) is not None:
        overrides["source_epochs"] = args.epochs
    if getattr(args, "mode", None) is not None:
        overrides["mode"] = args.mode
    if getattr(args, "sdm", False):
        overrides["sdm"] = True
    if overrides:
        log.debug(f"config overrides: {overrides}")
        config = config.replace(**overrides)
    return config


def _data_io(config):
    from .io.baseio import get_data_io

    return get_data_io(config.data_dir, train_size=config.train_size, test_size=config.test_size)


def _sequence(config):
    from .forge.domains import make_domain_sequence

    return make_domain_sequence(config.start_factor, config.end_factor, config.count, config.seed)


def _checkpoint(config, name):
    return os.path.join(config.checkpoint_dir, name)


def cmd_generate_domains(config, args):
    from .forge.streams import realize_domain
    from .harness.experiments import load_seed_data
    from .io.cacheio import domain_filename, write_domain

    data = load_seed_data(config, _data_io(config), config.seed)
    sequence = _sequence(config)
    for spec in sequence:
        shard = (spec.index, sequence.count) if config.pool_mode == "disjoint" else None
        write_domain(
            os.path.join(args.out, domain_filename(spec.index)),
            realize_domain(data.train, spec, labeled=False, shard=shard),
        )
        write_domain(
            os.path.join(args.out, domain_filename(spec.index, labeled=True)),
            realize_domain(data.test, spec, labeled=True),
        )
    print(f"domains: {', '.join(str(f) for f in sequence.factors)} written to {args.out}")


def cmd_train_source(config, args):
    from .engine.trainer import evaluate, train_source
    from .harness.experiments import load_seed_data
    from .io.atomic import directory_lock
    from .nets.checkpoint import save_bundle
    from .nets.models import build_bundle

    data = load_seed_data(config, _data_io(config), config.seed)
    bundle = build_bundle(seed=config.seed, noise_dim=config.noise_dim, input_shape=data.source.image_shape)
    bundle.to(config.device)
    train_source(bundle, data.source, config.source_epochs, config.batch_size, config.optimizer())
    with directory_lock(config.checkpoint_dir):
        save_bundle(bundle, _checkpoint(config, SOURCE_CHECKPOINT))
    print(f"source accuracy: {evaluate(bundle, data.test, use_target_encoder=False):.4f}")


def cmd_train_sdm_gan(config, args):
    from .engine.trainer import train_source_gan
    from .harness.experiments import load_seed_data
    from .io.atomic import directory_lock
    from .nets.checkpoint import load_bundle, save_bundle

    bundle = load_bundle(_checkpoint(config, SOURCE_CHECKPOINT)).to(config.device)
    data = load_seed_data(config, _data_io(config), config.seed)
    train_source_gan(
        bundle,
        data.source,
        config.gan_steps,
        config.batch_size,
        config.lambda_adv,
        config.optimizer(),
        config.scale_discriminator,
    )
    with directory_lock(config.checkpoint_dir):
        save_bundle(bundle, _checkpoint(config, SDM_CHECKPOINT))
    for warning in bundle.warnings:
        print(f"warning: {warning}")


def cmd_adapt(config, args):
    from .config import serialize
    from .harness.experiments import load_seed_data, prepare_domains
    from .engine.records import cell_label
    from .engine.trainer import adapt, evaluate
    from .io.atomic import directory_lock
    from .nets.checkpoint import load_bundle

    name = SDM_CHECKPOINT if config.sdm else SOURCE_CHECKPOINT
    bundle = load_bundle(_checkpoint(config, name)).to(config.device)
    data = load_seed_data(config, _data_io(config), config.seed)
    sequence = _sequence(config)
    targets, tests = prepare_domains(config, data, sequence)
    label = cell_label(config.mode, config.sdm)
    run_dir = os.path.join(config.run_dir, config.name, f"seed_{config.seed}", label)

    def eval_hook(snapshot, spec):
        return evaluate(snapshot, tests[spec.index])

    with directory_lock(run_dir):
        record = adapt(
            bundle,
            sequence,
            config.adaptation(),
            eval_hook=eval_hook,
            targets=targets,
            source_data=None if config.sdm else data.source,
            source_test=data.test,
            run_dir=run_dir,
        )
        record.experiment = config.name
        record.save(run_dir, serialize(config))
    for result in record.domains:
        print(f"domain {result.index} factor {result.factor}: accuracy {result.accuracy:.4f}")


def cmd_evaluate(config, args):
    from .engine.trainer import evaluate
    from .forge.domains import DomainSpec
    from .forge.streams import realize_domain
    from .harness.experiments import load_seed_data
    from .nets.checkpoint import load_bundle

    path = args.checkpoint or _checkpoint(config, SOURCE_CHECKPOINT)
    bundle = load_bundle(path).to(config.device)
    factor = config.end_factor if args.factor is None else args.factor
    data = load_seed_data(config, _data_io(config), config.seed)
    domain = realize_domain(data.test, DomainSpec(factor))
    accuracy = evaluate(bundle, domain, use_target_encoder=not args.source_encoder)
    print(f"factor {factor}: accuracy {accuracy:.4f}")


def cmd_run_table1(config, args):
    from .harness.experiments import ExperimentSpec, run_table1
    from .harness.report import table_payload

    table = run_table1(ExperimentSpec.from_config(config), config, _data_io(config))
    send_outputs(table_payload(table), "table1", config)


def cmd_run_sweep(config, args):
    from .harness.experiments import ExperimentSpec, run_subdomain_sweep
    from .harness.report import curve_payload

    curve = run_subdomain_sweep(ExperimentSpec.from_config(config), config, _data_io(config))
    send_outputs(curve_payload(curve), "sweep", config)


def cmd_report(config, args):
    from .engine.records import find_records
    from .exceptions import MissingPrerequisiteError
    from .harness.experiments import SWEEP_SUFFIX
    from .harness.report import render_report

    names = (config.name, config.name + SWEEP_SUFFIX)
    records = [r for r in find_records(config.run_dir) if r.experiment in names]
    if not records:
        raise MissingPrerequisiteError(f"no run records for {config.name} below {config.run_dir}")
    text = render_report(records, config.name, get_outputs(config.outputs), config.report_dir)
    log.debug(f"report:\n{text}")


COMMANDS = {
    "generate-domains": cmd_generate_domains,
    "train-source": cmd_train_source,
    "train-sdm-gan": cmd_train_sdm_gan,
    "adapt": cmd_adapt,
    "evaluate": cmd_evaluate,
    "run-table1": cmd_run_table1,
    "run-sweep": cmd_run_sweep,
    "report": cmd_report,
}


def main(argv=None):
    parser, description = build_parser()
    args = parser.parse_args(argv)

    # Display verison if asked
    log.info(description)
    if args.version:
        print(description)
        exit(0)
    # Turn on debug if needed
    if args.debug:
        log.setLevel(logging.DEBUG)
    elif args.info:
        log.setLevel(logging.INFO)
    if args.command is None:
        parser.print_help()
        exit(2)

    from .exceptions import IADAError
    from .seeding import set_deterministic

    try:
        config = load_run_config(args)
        set_deterministic()
        log.info(f"running {args.command} with seed {config.seed}")
        COMMANDS[args.command](config, args)
    except IADAError as e:
        log.error(f"{args.command} failed: {e}")
        exit(e.exit_code)
    exit(0)
