"""Subcommand handlers, loaded lazily through BaseCommand.COMMAND_MAP."""
