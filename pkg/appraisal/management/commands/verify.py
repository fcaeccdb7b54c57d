import json

from django.conf import settings

from appraisal.verify import SUITES, run_all, run_suite

from ._base import AppraisalCommand


class Command(AppraisalCommand):
    help = "Run the randomized check suites; exits 1 when any case fails."

    def add_arguments(self, parser):
        parser.add_argument("--suite", default="all", choices=[*SUITES, "all"])
        parser.add_argument("--count", type=int, default=settings.APPRAISAL_VERIFY_COUNT)
        parser.add_argument("--seed", type=int, default=settings.APPRAISAL_VERIFY_SEED)
        parser.add_argument("--workers", type=int, default=settings.APPRAISAL_VERIFY_WORKERS)
        parser.add_argument("--horizon", type=float, default=settings.APPRAISAL_VERIFY_HORIZON)
        parser.add_argument("--json", dest="json_path", help="Write the suite reports to this path.")

    def run(self, **options):
        args = (options["count"], options["seed"], options["workers"], options["horizon"])
        if options["suite"] == "all":
            reports = run_all(*args)
        else:
            reports = [run_suite(options["suite"], *args)]

        for report in reports:
            status = "pass" if report.passed else "FAIL"
            self.stdout.write(f"{report.suite}: {status} ({report.cases} cases, {len(report.failures)} failures)")
            for failure in report.failures:
                self.stdout.write(f"  [case {failure.case} seed {failure.seed}] {failure.invariant}")

        if options["json_path"]:
            document = [report.as_dict() for report in reports]
            with open(options["json_path"], "w", encoding="utf-8") as fp:
                fp.write(json.dumps(document, sort_keys=True, indent=2) + "\n")

        if not all(report.passed for report in reports):
            raise SystemExit(1)
