# -*- coding: utf-8 -*-
"""流水线编排模块
按固定顺序执行：特征 → 标注 → 视觉核 →（可选）去噪 → 文本核 → KCCA拟合 → 投影 → 标注迁移 → 评估。
基线空间跳过文本核、拟合与投影，直接在视觉核上检索近邻。
每个阶段计时；任一阶段失败都会带着阶段名中止，所有中间产物连同旁注写入 out_dir。
"""

# 标准库
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator
# 第三方库
import numpy as np
import yaml
from loguru import logger
from pydantic import BaseModel, ConfigDict
# 项目内部模块
from ..config import RUNTIME
from ..exceptions import AppError
from ..mapping import EmbeddingSpace, KernelKind
from ..model import (
    AnnotationSet, CvResult, FeatureMatrix, GramMatrix, KernelBlock, KernelSpec, MetricReport,
    PipelineConfig, RelevanceScores, RuntimeOptions, SemanticProjector, Vocabulary,
)
from ..storage import (
    KernelCache, load_annotations, load_feature_matrix, load_similarity, load_vocabulary, load_word_vectors,
    read_annotations, save_feature_matrix, save_gram, save_kernel_block, save_projector, save_real_annotations,
    save_scores, write_sidecar, write_topn_tsv,
)
from ..utils import StageTimer, convert_to_jsonable, get_iso8601_timestamp, hash_array, hash_file
from .denoise import pre_propagate_tags
from .evaluation import evaluate, jaccard_neighborhood, render_report_tsv
from .kcca import fit_kcca, project, subsample_training
from .kernels import compute_kernel
from .synth import synth_dataset
from .transfer import AbstractRelevance, NeighborIndex, TransferData, TransferQueries, cross_validate
from .transfer.relevance import ranked_predictions

STAGES = ("features", "annotations", "visual_kernel", "denoise", "textual_kernel",
          "fit", "project", "annotate", "evaluate")


class PipelineResult(BaseModel):
    """一次流水线运行的结果"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    scores: RelevanceScores
    report: MetricReport
    artifacts: dict[str, Path]
    timings: dict[str, float]
    cv: CvResult | None = None
    jaccard: dict[int, float] = {}


def content_hash(item: FeatureMatrix | AnnotationSet) -> str:
    """特征矩阵或标注的内容哈希（含图像标识与词表）"""
    if isinstance(item, FeatureMatrix):
        return hash_array(item.values, item.row_ids)
    return hash_array(item.matrix, item.row_ids, item.vocabulary.labels)


class PipelineRunner:
    """流水线执行器
    持有一次运行的全部中间状态；阶段之间只通过实例属性传递数据。
    Attributes:
        cfg: 流水线配置
        runtime: 进程级运行选项（线程数、缓存目录）
        timer: 各阶段耗时
        cache: 核矩阵缓存
        artifacts: 产物名称 -> 路径
    """

    def __init__(self, cfg: PipelineConfig, runtime: RuntimeOptions | None = None) -> None:
        self.cfg = cfg
        self.runtime = runtime or RUNTIME
        self.out_dir = Path(cfg.out_dir)
        self.timer = StageTimer()
        self.cache = KernelCache(self.runtime.cache_dir)
        self.artifacts: dict[str, Path] = {}
        self.input_hashes: dict[str, str] = {}
        self.semantic = cfg.transfer.space is EmbeddingSpace.SEMANTIC
        self.projector: SemanticProjector | None = None
        self.cv_result: CvResult | None = None
        self.jaccard: dict[int, float] = {}

    @classmethod
    def create_and_run(cls, cfg: PipelineConfig, runtime: RuntimeOptions | None = None) -> PipelineResult:
        """工厂方法：创建执行器并运行完整流水线"""
        runner = cls(cfg, runtime)
        return runner.run()

    @contextmanager
    def _stage(self, name: str) -> Iterator[None]:
        """执行一个阶段：计时、记录日志，并把异常标记上阶段名"""
        with self.timer.measure(name):
            try:
                yield
            except AppError.Exception as e:
                e.stage = e.stage or name
                logger.opt(colors=True).error("<r>{}</r>:{} |<r>FAIL</r>", name, e)
                raise
            except Exception as e:
                error = AppError.Exception(AppError.UnknownError, f"{type(e).__name__}: {e}", stage=name)
                logger.opt(colors=True).error("<r>{}</r>:{} |<r>FAIL</r>", name, error)
                raise error from e
        logger.opt(colors=True).info("<g>{}</g>:耗时 {:.3f}s |<g>SUCCESS</g>", name, self.timer.durations[name])

    def _skip(self, name: str, reason: str) -> None:
        logger.opt(colors=True).info("<y>{}</y>:{} |<y>SKIP</y>", name, reason)

    def _path(self, name: str, filename: str) -> Path:
        path = self.out_dir / filename
        self.artifacts[name] = path
        return path

    def _section(self, *names: str) -> dict[str, Any]:
        dump = self.cfg.model_dump(mode="json")
        return {"seed": self.cfg.seed, **{name: dump[name] for name in names}}

    def run(self) -> PipelineResult:
        """按阶段顺序执行全部流程"""
        self.prepare()
        with self._stage("annotate"):
            self._annotate()
        with self._stage("evaluate"):
            self._evaluate()
        self._write_run_record()
        logger.opt(colors=True).info("<g>Pipeline</g>:总耗时 {:.3f}s 缓存命中 {} 次 |<g>ALL SUCCESS</g>",
                                     self.timer.total, self.cache.hits)
        return PipelineResult(scores=self.scores, report=self.report, artifacts=dict(self.artifacts),
                              timings=dict(self.timer.durations), cv=self.cv_result, jaccard=dict(self.jaccard))

    def cross_validate(self, folds: int = 3) -> CvResult:
        """执行到投影阶段后, 在训练集上做交叉验证选择 K 或 λ"""
        self.prepare()
        data, _, _ = self._transfer_inputs()
        with self._stage("annotate"):
            self.cv_result = cross_validate(data, self.cfg.transfer, seed=self.cfg.seed, folds=folds)
        return self.cv_result

    def prepare(self) -> None:
        """执行标注迁移之前的全部阶段（读取、核矩阵、去噪、拟合与投影）"""
        logger.opt(colors=True).info("<g>Pipeline</g>:space=<c>{}</c> method=<c>{}</c> out=<c>{}</c> |<g>Start</g>",
                                     self.cfg.transfer.space.value, self.cfg.transfer.method.value, self.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        with self._stage("features"):
            self._load_features()
        with self._stage("annotations"):
            self._load_annotations()
        with self._stage("visual_kernel"):
            self._visual_kernel()
        if self.semantic and self.cfg.denoise.enabled:
            with self._stage("denoise"):
                self._denoise()
        else:
            self._skip("denoise", "未启用标签预传播")
            self.text_tags = self.train_tags
        if self.semantic:
            with self._stage("textual_kernel"):
                self._textual_kernel()
            with self._stage("fit"):
                self._fit()
            with self._stage("project"):
                self._project()
        else:
            for name in ("textual_kernel", "fit", "project"):
                self._skip(name, "基线空间不需要语义投影")

    # ---------------------------------------------------------------- 输入

    def _load_features(self) -> None:
        data = self.cfg.data
        if data.synthetic is not None:
            self.synth = synth_dataset(data.synthetic)
            self.train_features = self.synth.train_features()
            self.test_features = self.synth.test_features()
        else:
            self.train_features = load_feature_matrix(data.train_features)
            self.test_features = load_feature_matrix(data.test_features)
            self.input_hashes["train_features"] = hash_file(data.train_features)
            self.input_hashes["test_features"] = hash_file(data.test_features)
        if self.train_features.n_cols != self.test_features.n_cols:
            AppError.DimensionMismatch.raise_(
                f"训练特征维度 {self.train_features.n_cols} 与测试特征维度 {self.test_features.n_cols} 不一致")
        logger.opt(colors=True).info("<g>features</g>:训练 <c>{}</c> 测试 <c>{}</c> 维度 <c>{}</c>",
                                     self.train_features.n_rows, self.test_features.n_rows,
                                     self.train_features.n_cols)

    def _load_annotations(self) -> None:
        data = self.cfg.data
        if data.synthetic is not None:
            self.vocab: Vocabulary = self.synth.vocabulary
            self.train_tags = self.synth.train_annotations(noisy=data.noisy_tags)
            self.test_truth = self.synth.test_annotations()
        else:
            self.vocab = load_vocabulary(data.vocab)
            train, dropped = read_annotations(data.train_annotations, self.vocab)
            if dropped:
                logger.opt(colors=True).warning("<y>annotations</y>:训练标注中 {} 个词表外标签已丢弃", dropped)
            self.train_tags = train.aligned_to(self.train_features.row_ids)
            self.test_truth = load_annotations(data.test_annotations, self.vocab).aligned_to(self.test_features.row_ids)
            for name in ("vocab", "train_annotations", "test_annotations"):
                self.input_hashes[name] = hash_file(getattr(data, name))

    # ---------------------------------------------------------------- 核矩阵

    def _cached_kernel(self, spec: KernelSpec, rows: FeatureMatrix | AnnotationSet,
                       cols: FeatureMatrix | AnnotationSet | None = None,
                       extra_hashes: tuple[str, ...] = (), **inputs: Any) -> GramMatrix | KernelBlock:
        """带缓存的核计算：键由核函数标识与输入内容哈希决定"""
        hashes = [content_hash(rows)] + ([] if cols is None else [content_hash(cols)])
        key = KernelCache.make_key(spec.kernel_id, "gram" if cols is None else "block", *hashes, *extra_hashes)
        cached = self.cache.load(key)
        if cached is not None:
            if cols is None:
                return GramMatrix(values=cached.values, kernel_id=cached.kernel_id, row_ids=cached.row_ids)
            return cached
        result = compute_kernel(spec, rows, cols, **inputs)
        self.cache.store(key, result.as_block() if isinstance(result, GramMatrix) else result)
        return result

    def _visual_kernel(self) -> None:
        spec = self.cfg.kernels.visual
        chunking = {"threads": self.runtime.threads, "progress": self.runtime.progress}
        self.kv_train: GramMatrix = self._cached_kernel(spec, self.train_features, **chunking)
        self.kv_test: KernelBlock = self._cached_kernel(spec, self.test_features, self.train_features, **chunking)
        inputs = {"train_features": content_hash(self.train_features),
                  "test_features": content_hash(self.test_features)}
        config = self._section("kernels")
        save_gram(self.kv_train, self._path("kv_train", "kv_train.fmat"), inputs, config)
        save_kernel_block(self.kv_test, self._path("kv_test", "kv_test.fmat"), inputs, config)

    def _denoise(self) -> None:
        self.text_tags = pre_propagate_tags(self.train_tags, self.kv_train, self.cfg.denoise)
        save_real_annotations(self.text_tags, self._path("tags_denoised", "tags_denoised.fmat"),
                              {"train_annotations": content_hash(self.train_tags),
                               "kv_train": hash_array(self.kv_train.values, self.kv_train.row_ids)},
                              self._section("denoise"))

    def _textual_kernel(self) -> None:
        spec = self.cfg.kernels.textual
        data = self.cfg.data
        inputs: dict[str, Any] = {}
        extra: tuple[str, ...] = ()
        if spec.kind is KernelKind.ONTOLOGY_LABELS:
            if data.similarity is None:
                AppError.MissingConfiguration.raise_("ontology_labels 文本核需要 data.similarity")
            inputs["similarity"] = load_similarity(data.similarity, self.vocab)
            extra = (hash_file(data.similarity),)
        elif spec.kind is KernelKind.WORDVEC_LABELS:
            if data.word_vectors is None:
                AppError.MissingConfiguration.raise_("wordvec_labels 文本核需要 data.word_vectors")
            inputs["word_vectors"] = load_word_vectors(data.word_vectors)
            extra = (hash_file(data.word_vectors),)
        self.kt_train: GramMatrix = self._cached_kernel(spec, self.text_tags, extra_hashes=extra, **inputs)
        save_gram(self.kt_train, self._path("kt_train", "kt_train.fmat"),
                  {"tags": content_hash(self.text_tags)}, self._section("kernels"))

    # ---------------------------------------------------------------- 语义空间

    def _fit(self) -> None:
        kcca = self.cfg.kcca
        n = self.kv_train.n
        self.fit_idx = np.arange(n)
        if kcca.train_subset is not None and kcca.train_subset < n:
            self.fit_idx = subsample_training(n, kcca.train_subset, self.cfg.seed)
            logger.opt(colors=True).info("<g>fit</g>:使用 <c>{}</c>/{} 张训练图像拟合投影", self.fit_idx.size, n)
        Kv = self.kv_train.subset(self.fit_idx)
        Kt = self.kt_train.subset(self.fit_idx)
        self.projector = fit_kcca(Kv, Kt, kcca)
        path = self._path("model", "model.ssp")
        save_projector(self.projector, path)
        write_sidecar(path, "projector", {"m_dims": self.projector.m_dims, "n_train": self.projector.n_train},
                      {"kv_train": hash_array(Kv.values, Kv.row_ids), "kt_train": hash_array(Kt.values, Kt.row_ids)},
                      self._section("kcca"))

    def _project(self) -> None:
        train_rows = self.kv_train.as_block().subset(cols=self.fit_idx)
        test_rows = self.kv_test.subset(cols=self.fit_idx)
        self.psi_train = project(self.projector, train_rows)
        self.psi_test = project(self.projector, test_rows)
        for name, psi in (("psi_train", self.psi_train), ("psi_test", self.psi_test)):
            path = self._path(name, f"{name}.fmat")
            save_feature_matrix(psi, path, dtype="f64")
            write_sidecar(path, "features", {"m_dims": psi.n_cols}, {"projector": hash_file(self.artifacts["model"])})

    # ---------------------------------------------------------------- 迁移与评估

    def _transfer_inputs(self) -> tuple[TransferData, TransferQueries, FeatureMatrix | KernelBlock]:
        if self.semantic:
            index = NeighborIndex.from_embedding(self.psi_train)
            query = self.psi_test
            data = TransferData(index, self.train_tags, self.psi_train)
            queries = TransferQueries.from_index(index, query)
        else:
            index = NeighborIndex.from_gram(self.kv_train)
            query = self.kv_test
            data = TransferData(index, self.train_tags, self.train_features)
            queries = TransferQueries.from_index(index, query, self.test_features)
        return data, queries, query

    def _annotate(self) -> None:
        transfer = self.cfg.transfer
        self.transfer_data, queries, self.query = self._transfer_inputs()
        if transfer.cv:
            self.cv_result = cross_validate(self.transfer_data, transfer, seed=self.cfg.seed)
            field = "K" if transfer.method.uses_neighbors else "svm_lambda"
            best = int(self.cv_result.best) if field == "K" else self.cv_result.best
            transfer = transfer.model_copy(update={field: best})
        self.transfer_cfg = transfer
        model = AbstractRelevance.create(transfer.method, transfer, seed=self.cfg.seed).fit(self.transfer_data)
        self.scores = model.score(queries)
        inputs = {"train_annotations": content_hash(self.train_tags)}
        save_scores(self.scores, self._path("scores", "scores.fmat"), inputs, self._section("transfer"))
        path = self._path("annotations", "annotations.tsv")
        write_topn_tsv(path, self.scores.row_ids, self.vocab, ranked_predictions(self.scores, self.cfg.eval.n))
        write_sidecar(path, "annotations_tsv", {"n": self.cfg.eval.n}, {"scores": hash_file(self.artifacts["scores"])})

    def _evaluate(self) -> None:
        cfg = self.cfg.eval
        self.report = evaluate(self.scores, self.test_truth, cfg.n, per_label=cfg.per_label)
        for k in cfg.jaccard_k:
            self.jaccard[k] = jaccard_neighborhood(self.transfer_data.index, self.query, self.test_truth,
                                                   self.train_tags, k)
            logger.opt(colors=True).info("<g>evaluate</g>:Jaccard@{}=<c>{:.4f}</c>", k, self.jaccard[k])
        path = self._path("report", "report.tsv")
        path.write_text(render_report_tsv(self.report), encoding="utf-8")
        write_sidecar(path, "report", {"jaccard": self.jaccard}, {"scores": hash_file(self.artifacts["scores"])},
                      self._section("eval"))

    def _write_run_record(self) -> None:
        record = {
            "created": get_iso8601_timestamp(),
            "seed": self.cfg.seed,
            "config": self.cfg.model_dump(mode="json"),
            "inputs": self.input_hashes,
            "timings": self.timer.durations,
            "total_seconds": self.timer.total,
            "kernel_cache": {"enabled": self.cache.enabled, "hits": self.cache.hits, "misses": self.cache.misses},
            "artifacts": {name: path.name for name, path in self.artifacts.items()},
            "cv": None if self.cv_result is None else self.cv_result.model_dump(),
            "metrics": self.report.model_dump(exclude={"per_label"}),
            "jaccard": self.jaccard,
        }
        path = self.out_dir / "run.yaml"
        try:
            with open(path, "w", encoding="utf-8") as f:
                yaml.safe_dump(convert_to_jsonable(record), f, allow_unicode=True, sort_keys=False)
        except OSError as e:
            AppError.FileIOError.raise_(f"写入运行记录失败 {path} —— {e}")
        self.artifacts["run"] = path


def run_pipeline(cfg: PipelineConfig, runtime: RuntimeOptions | None = None) -> PipelineResult:
    """按配置执行完整流水线，返回评估报告与产物路径"""
    return PipelineRunner.create_and_run(cfg, runtime)
