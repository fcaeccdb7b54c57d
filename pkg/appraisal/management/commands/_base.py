import logging

from django.core.management.base import BaseCommand

from appraisal.network import AppraisalError


class AppraisalCommand(BaseCommand):
    """Base for the toolkit commands.

    Domain and file errors become a single `error: <message>` line on stderr and
    exit status 1; argparse keeps exit status 2 for usage errors.
    """

    requires_system_checks = []

    def handle(self, *args, **options):
        verbosity = options.get("verbosity", 1)
        if verbosity >= 2:
            logging.getLogger("appraisal").setLevel(logging.DEBUG if verbosity >= 3 else logging.INFO)
        try:
            self.run(**options)
        except (AppraisalError, OSError) as exc:
            message = " ".join(str(exc).split())
            self.stderr.write(f"error: {message}", style_func=lambda text: text)
            raise SystemExit(1)

    def run(self, **options):
        raise NotImplementedError("subclasses of AppraisalCommand must provide run()")

    def emit(self, path, text: str) -> None:
        """Write text to path, or to stdout when no path is given."""
        if path:
            with open(path, "w", encoding="utf-8", newline="") as fp:
                fp.write(text)
        else:
            self.stdout.write(text, ending="")
