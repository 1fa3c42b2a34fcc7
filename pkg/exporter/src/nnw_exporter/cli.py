import argparse

from .export import run_export


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nnw-export",
        description="Export the reference ResNet-18 to an NNW1 archive and "
                    "generate golden fixtures",
    )
    parser.add_argument("--out-dir", required=True)
    args = parser.parse_args(argv)
    manifest = run_export(args.out_dir)
    for k, v in manifest.items():
        print(f"{k}={v}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
