"""应用程序异常处理模块

该模块提供了统一的异常处理机制，包含流水线所有可能抛出的错误类型。

模块组成：
- AppError: 错误枚举类，定义了系统中所有可能的错误代码、消息与退出码
- AppError.Exception: 自定义异常类，用于抛出带有错误代码的异常

使用方法：
1. 导入异常类:
   from semspace.exceptions import AppError

2. 抛出异常:
   AppError.ZeroNormRow.raise_("行 img7 的范数为 0")

3. 捕获异常:
   try:
       ...
   except AppError.Exception as e:
       print(f"错误码: {e.error_code.code}")
       sys.exit(e.error_code.exit_code)
"""

from .app_errors import AppError, AppException

__all__ = ["AppError", "AppException"]
