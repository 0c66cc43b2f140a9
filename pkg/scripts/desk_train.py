"""Reproduce the committed desk-scale checkpoint.

Generates a 4000-object training corpus (7 noise levels each) and a
200-object validation corpus, trains the default network, and copies the
best checkpoint and epoch log into ``artifacts/desk``. Corpora are large
(about 5.5 GB) and are kept in the work directory, not the repository.

Usage::

    python scripts/desk_train.py [--work /tmp/maskwfs-desk] [--max-epochs 40]
"""

import argparse
import logging
import os
import shutil
from pathlib import Path

from threadpoolctl import threadpool_limits

from maskwfs.dataset import GenConfig, generate_corpus
from maskwfs.optics import default_mask
from maskwfs.training import TrainConfig, train

TRAIN_SEED = 1
VAL_SEED = 2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--work", default="/tmp/maskwfs-desk")
    ap.add_argument("--n-train", type=int, default=4000)
    ap.add_argument("--n-val", type=int, default=200)
    ap.add_argument("--max-epochs", type=int, default=40)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "artifacts" / "desk"))
    a = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    work = Path(a.work)
    work.mkdir(parents=True, exist_ok=True)
    mask = default_mask()
    train_path, val_path = work / "train.wds", work / "val.wds"
    with threadpool_limits(a.threads):
        if not train_path.exists():
            generate_corpus(GenConfig(a.n_train, mask=mask, master_seed=TRAIN_SEED), train_path, threads=a.threads)
        if not val_path.exists():
            generate_corpus(GenConfig(a.n_val, mask=mask, master_seed=VAL_SEED), val_path, threads=a.threads)
        cfg = TrainConfig(max_epochs=a.max_epochs, train_path=str(train_path), val_path=str(val_path),
                          checkpoint_dir=str(work / "ck"))
        res = train(cfg, mask)
    logging.info("best epoch %d val %.4e stopped %d", res.best_epoch, res.best_val, res.stopped_epoch)
    os.makedirs(a.out, exist_ok=True)
    for name in ("best.wnet", "train_log.tsv"):
        shutil.copyfile(work / "ck" / name, Path(a.out) / name)


if __name__ == "__main__":
    main()
