import logging

from ..losses import LossBreakdown

log = logging.getLogger("entropy_osr.meta")


class TrainingCallback:
    def __init__(self, log_every=100):
        self.log_every = log_every

    def training_started(self, cfg):
        log.info("Meta-training started: %s episodes, seed %s", cfg.episodes, cfg.seed)

    def episode_started(self, episode_idx, episode):
        log.debug("Episode %s started: %s", episode_idx, episode.partition.json)

    def episode_finished(self, episode_idx, breakdown: LossBreakdown):
        if self.log_every and episode_idx % self.log_every == 0:
            log.info(
                "Episode %s: total %.6f (meta_ce %.6f, entropy %.6f, open %.6f) lr %s",
                episode_idx,
                breakdown.total,
                breakdown.meta_ce,
                breakdown.entropy_dist,
                breakdown.open_bce,
                breakdown.lr,
            )

    def episode_error(self, episode_idx, exception):
        log.error("Episode %s failed: %s", episode_idx, exception)

    def training_finished(self, params):
        log.info("Meta-training finished at step %s", params.step)


class StatsKeepingTrainingCallback(TrainingCallback):
    def __init__(self, log_every=100):
        super().__init__(log_every=log_every)

        self.finished_episodes_count = 0
        self.failed_episodes_count = 0
        self.loss_sums = {"meta_ce": 0.0, "entropy_dist": 0.0, "open_bce": 0.0, "total": 0.0}

    def episode_finished(self, episode_idx, breakdown: LossBreakdown):
        super().episode_finished(episode_idx, breakdown)
        self.finished_episodes_count += 1
        for key in self.loss_sums:
            self.loss_sums[key] += getattr(breakdown, key)

    def episode_error(self, episode_idx, exception):
        super().episode_error(episode_idx, exception)
        self.failed_episodes_count += 1

    def mean_losses(self):
        if not self.finished_episodes_count:
            return {}
        return {k: v / self.finished_episodes_count for k, v in self.loss_sums.items()}

    def stats(self):
        ret = [f"{self.finished_episodes_count} episodes finished"]
        if self.finished_episodes_count:
            ret.append(f"mean total loss: {self.mean_losses()['total']:.6f}")
        if self.failed_episodes_count:
            ret.append(f"failed: {self.failed_episodes_count}")
        return ", ".join(ret)
