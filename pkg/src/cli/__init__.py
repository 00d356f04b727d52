from .config import RunConfig, build_run_config, read_config_file
from .commands import cmd_train, cmd_eval, cmd_predict, cmd_baseline, cmd_inspect
from .app import main, build_parser
