from io import StringIO

import yaml

from ..pgm import write_pgm
from ..types import Dataset
from . import BaseWriter

MANIFEST_NAME = "manifest.csv"
SIDECAR_NAME = "dataset.yaml"


class ManifestWriter(BaseWriter):
    """Writes a dataset as ``<target>/manifest.csv`` plus one P5 file per image.

    Images go to ``<class_name>/<index>.pgm``. ``finish`` adds a
    ``dataset.yaml`` sidecar with the split, the class names and the echo.
    """

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self._datasets = []

    def write(self, dataset: Dataset):
        self.target.mkdir(parents=True, exist_ok=True)
        lines = []
        for index, (image, label) in enumerate(zip(dataset.images, dataset.labels)):
            class_name = dataset.class_names[int(label)]
            relative_path = f"{class_name}/{index:06d}.pgm"
            (self.target / class_name).mkdir(exist_ok=True)
            write_pgm(self.target / relative_path, image)
            lines.append(f"{class_name},{relative_path}\n")
        with open(self.target / MANIFEST_NAME, "w", encoding="utf-8", newline="\n") as f:
            f.writelines(lines)
        self._datasets.append(dataset)

    def finish(self):
        io = StringIO()
        yaml.safe_dump(
            {
                "splits": [
                    {
                        "split": ds.split_tag,
                        "images": len(ds),
                        "image_size": list(ds.image_size),
                        "class_names": list(ds.class_names),
                    }
                    for ds in self._datasets
                ],
                "config": self.echo,
                "seed": self.echo.get("seed"),
            },
            io,
            allow_unicode=True,
            sort_keys=True,
        )
        with open(self.target / SIDECAR_NAME, "w", encoding="utf-8") as f:
            f.write(io.getvalue())


def export_dataset(dataset: Dataset, target, echo=None, force=False):
    writer = ManifestWriter(target=target, echo=echo, force=force)
    writer.write(dataset)
    writer.finish()
    return writer.target / MANIFEST_NAME
