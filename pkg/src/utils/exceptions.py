"""
커스텀 예외 클래스
"""


class ArticulationToolkitError(Exception):
    """툴킷 기본 예외"""
    pass


class InvalidInputError(ArticulationToolkitError, ValueError):
    """입력 불변식/전제 조건 위반 예외"""
    pass


class MeshFormatError(InvalidInputError):
    """OBJ 메시 파싱 실패 예외"""
    pass


class ImageFormatError(InvalidInputError):
    """PPM/PGM 이미지 파싱 실패 예외"""
    pass


class FeatureFormatError(InvalidInputError):
    """면 특징 바이너리 파싱 실패 예외"""
    pass


class SchemaError(InvalidInputError):
    """JSON 스키마 검증 실패 예외"""
    pass


class SegmentationError(ArticulationToolkitError):
    """파트 분할 실패 예외"""
    pass


class OptimizationError(ArticulationToolkitError):
    """관절 최적화 실행 오류 예외"""
    pass
