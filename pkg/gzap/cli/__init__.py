from .commands import build_parser, cmd_ablate, cmd_eval, cmd_infer, cmd_synth, cmd_train, main

__all__ = ["build_parser", "main", "cmd_synth", "cmd_train", "cmd_infer", "cmd_eval", "cmd_ablate"]
